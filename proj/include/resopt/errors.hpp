#pragma once

#include <stdexcept>
#include <string>

namespace resopt {

/// Base class for every error thrown by this library.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class invalid_parameter_error : public error {
public:
  using error::error;
};

/// Degenerate or ill-ordered object-size boundaries.
class invalid_boundary_error : public error {
public:
  using error::error;
};

/// Two histograms with different bin edges were combined.
class incompatible_support_error : public error {
public:
  using error::error;
};

/// Batch-level reduction over zero usable elements.
class empty_batch_error : public error {
public:
  using error::error;
};

/// Fewer samples than the statistic requires.
class insufficient_data_error : public error {
public:
  using error::error;
};

/// Target distribution has zero total mass and cannot be normalized.
class degenerate_target_error : public error {
public:
  using error::error;
};

/// Math function evaluated outside its domain (e.g. log of a non-positive).
class domain_error : public error {
public:
  using error::error;
};

/// Vector/matrix shape mismatch.
class dimension_error : public error {
public:
  using error::error;
};

class config_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

}  // namespace resopt
