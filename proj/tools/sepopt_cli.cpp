#include "sepopt/cli.hpp"

int main(int argc, char** argv) { return sepopt::run_cli(argc, argv); }
