// error.hpp
//
// Exception types shared by every stage of the pipeline.  The CLI maps
// the three families below onto process exit codes.

#pragma once

#include <stdexcept>
#include <string>

namespace cnamecloak {

/// exit-code family an error belongs to
enum class error_family { config = 2, data = 3, model = 4 };

class error : public std::runtime_error {
public:
  error(error_family family, const std::string& what)
      : std::runtime_error(what), family_{family} {}

  error_family family() const noexcept { return family_; }

private:
  error_family family_;
};

// data errors

struct io_error : error {
  explicit io_error(const std::string& w) : error(error_family::data, "io error: " + w) {}
};

struct schema_error : error {
  schema_error(const std::string& w, std::size_t line = 0)
      : error(error_family::data,
              line ? "schema error at line " + std::to_string(line) + ": " + w
                   : "schema error: " + w),
        line_number{line} {}
  std::size_t line_number;
};

struct url_error : error {
  explicit url_error(const std::string& w) : error(error_family::data, "url error: " + w) {}
};

struct resolve_error : error {
  explicit resolve_error(const std::string& w) : error(error_family::data, "resolve error: " + w) {}
};

struct empty_input : error {
  explicit empty_input(const std::string& w) : error(error_family::data, "empty input: " + w) {}
};

struct empty_site : error {
  explicit empty_site(const std::string& site_id)
      : error(error_family::data, "site has no requests: " + site_id) {}
};

struct degenerate_data : error {
  explicit degenerate_data(const std::string& w) : error(error_family::data, "degenerate data: " + w) {}
};

struct too_few_instances : error {
  explicit too_few_instances(const std::string& w) : error(error_family::data, "too few instances: " + w) {}
};

// model errors

struct schema_mismatch : error {
  explicit schema_mismatch(const std::string& w) : error(error_family::model, "schema mismatch: " + w) {}
};

struct invalid_params : error {
  explicit invalid_params(const std::string& w) : error(error_family::model, "invalid params: " + w) {}
};

struct not_supported : error {
  explicit not_supported(const std::string& w) : error(error_family::model, "not supported: " + w) {}
};

// config errors

struct config_error : error {
  explicit config_error(const std::string& w) : error(error_family::config, "config error: " + w) {}
};

}  // namespace cnamecloak
