#include "exc/cli.hpp"

int main(int argc, char** argv) { return exc::cli::run(argc, argv); }
