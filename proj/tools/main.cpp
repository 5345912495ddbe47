#include "wavelogit/cli.hpp"

int main(int argc, char** argv) { return wavelogit::run_cli(argc, argv); }
