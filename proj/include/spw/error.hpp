#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spw {

/// Base class for every error raised by the workbench.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller supplied arguments outside the documented ranges.
class InvalidParameters : public Error {
 public:
  using Error::Error;
};

/// Malformed DIMACS input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A message product had zero norm: the incoming warnings are mutually
/// inconsistent. `variable` and `clause` identify the directed edge; `clause`
/// is `npos` for site-level products that exclude no clause.
class ContradictionError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ContradictionError(std::size_t variable, std::size_t clause, const std::string& what)
      : Error(what), variable_(variable), clause_(clause) {}
  std::size_t variable() const noexcept { return variable_; }
  std::size_t clause() const noexcept { return clause_; }

 private:
  std::size_t variable_;
  std::size_t clause_;
};

/// A requested structure would exceed a configured size budget.
class ResourceLimit : public Error {
 public:
  ResourceLimit(double estimate, const std::string& what) : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

}  // namespace spw
