#include "app.hpp"

int main(int argc, char** argv) { return lipreach::cli::run(argc, argv); }
