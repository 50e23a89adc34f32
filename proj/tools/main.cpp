#include "groundwork/cli.hpp"

int main(int argc, char** argv) { return groundwork::cli::main(argc, argv); }
