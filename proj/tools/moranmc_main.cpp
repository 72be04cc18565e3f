#include "moranmc/cli.hpp"

int main(int argc, char** argv) { return moranmc::cli_main(argc, argv); }
