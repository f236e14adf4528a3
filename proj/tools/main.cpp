#include "chimp/cli.hpp"

int main(int argc, char** argv) { return chimp::run_cli(argc, argv); }
