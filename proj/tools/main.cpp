#include "cli.hpp"

int main(int argc, char** argv) { return spikegam::cli::run_cli(argc, argv); }
