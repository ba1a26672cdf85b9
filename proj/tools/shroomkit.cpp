#include "shroom/cli.hpp"

int main(int argc, char** argv) { return shroom::run_cli(argc, argv); }
