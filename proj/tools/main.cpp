#include "kinfit/io.hpp"

int main(int argc, char** argv) { return kinfit::run_cli(argc, argv); }
