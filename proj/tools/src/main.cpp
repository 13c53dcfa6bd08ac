#include "harness/cli.hpp"

int main(int argc, char** argv) { return peat::harness::cli_main(argc, argv); }
