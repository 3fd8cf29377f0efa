#include "superexp/cli.hpp"

int main(int argc, char** argv) { return superexp::cli::run_cli(argc, argv); }
