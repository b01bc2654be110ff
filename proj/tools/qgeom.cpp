#include "qgeom/cli.hpp"

int main(int argc, char** argv) { return qgeom::cli::run_cli(argc, argv); }
