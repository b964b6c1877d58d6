#include "chshforge/cli.hpp"

int main(int argc, char** argv) { return chshforge::run_cli(argc, argv); }
