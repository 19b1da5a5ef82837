#include "relaxbsde/cli.hpp"

int main(int argc, char** argv) { return relaxbsde::cli::run(argc, argv); }
