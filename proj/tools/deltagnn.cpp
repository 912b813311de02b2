#include <iostream>

#include "deltagnn/trainer.h"

int main(int argc, char** argv) { return deltagnn::run_cli(argc, argv, std::cout, std::cerr); }
