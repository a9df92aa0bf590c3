#include "loopsum/cli.hpp"

int main(int argc, char **argv) { return loopsum::cli::main(argc, argv); }
