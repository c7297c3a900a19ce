#include "gridsettle/cli.hpp"

int main(int argc, char** argv) { return gridsettle::cli::main(argc, argv); }
