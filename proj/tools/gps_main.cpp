#include "gps/cli.hpp"

int main(int argc, char** argv) { return gps::run_cli(argc, argv); }
