#include "dispersive/cli.hpp"

int main(int argc, char** argv) { return dispersive::cli::dispatch(argc, argv); }
