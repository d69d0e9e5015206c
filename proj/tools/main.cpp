#include "threshlogit_cli.hpp"

int main(int argc, char** argv) { return threshlogit::cli::run(argc, argv); }
