// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lbb {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct malformed_instance : error {
  using error::error;
};
struct bad_params : error {
  using error::error;
};
struct io_error : error {
  using error::error;
};
struct schema_error : error {
  using error::error;
};
struct box_too_large : error {
  using error::error;
};
struct empty_candidates : error {
  using error::error;
};
struct empty_mask : error {
  using error::error;
};
struct empty_trace : error {
  using error::error;
};
struct empty_dataset : error {
  using error::error;
};
struct cyclic_tree : error {
  using error::error;
};
struct shape_mismatch : error {
  using error::error;
};
struct numerical_divergence : error {
  using error::error;
};
struct no_qualifying_states : error {
  using error::error;
};
struct action_not_masked : error {
  using error::error;
};
struct missing_artifact : error {
  using error::error;
};
struct config_error : error {
  using error::error;
};
struct solve_aborted : error {
  using error::error;
};

}  // namespace lbb
