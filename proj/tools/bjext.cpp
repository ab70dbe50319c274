#include "cli_app.hpp"

int main(int argc, char** argv) {
  const auto parsed = bjext::cli::parse(argc, argv);
  if (!parsed.config) return parsed.exit_code;
  return bjext::cli::run(*parsed.config);
}
