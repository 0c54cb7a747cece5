#include "hetgrad/commands.hpp"

int main(int argc, char** argv) { return hetgrad::run_command(argc, argv); }
