#include "gv/commands.hpp"

int main(int argc, char** argv) { return gv::run_cli(argc, argv); }
