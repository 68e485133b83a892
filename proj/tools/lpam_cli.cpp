#include "lpam_app.hpp"

int main(int argc, char** argv) { return lpam::app::run_cli(argc, argv); }
