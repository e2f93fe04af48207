#pragma once

#include <stdexcept>
#include <string>

namespace dsplit {

// base of everything the library throws on purpose
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct budget_error : error { using error::error; };
struct overflow_error : error { using error::error; };
struct rank_loss_error : error { using error::error; };
struct cut_locus_error : error { using error::error; };
struct aliasing_error : error { using error::error; };
struct class_mismatch_error : error { using error::error; };
struct regularity_error : error { using error::error; };
struct precondition_error : error { using error::error; };
struct tower_error : error { using error::error; };

struct config_error : error {
  config_error(std::string field, const std::string& what)
      : error(field.empty() ? what : field + ": " + what), field(std::move(field)) {}
  std::string field;
};

}  // namespace dsplit
