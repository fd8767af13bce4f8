#pragma once

#include <stdexcept>
#include <string>

namespace mcconv {

// Base class for all library errors. Subclasses name the contract that was
// violated; messages carry the offending values.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

class IndexMismatchError : public Error {
 public:
  using Error::Error;
};

class NotEstimatedError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

class MissingNormalsError : public Error {
 public:
  using Error::Error;
};

class InvalidLabelError : public Error {
 public:
  using Error::Error;
};

class DatasetNotFoundError : public Error {
 public:
  using Error::Error;
};

// Reruns fn, rethrowing any library error of the same type with a context
// prefix attached to its message.
template <typename Fn>
decltype(auto) with_error_prefix(const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const EmptyInputError& e) {
    throw EmptyInputError(prefix + e.what());
  } catch (const InvalidParameterError& e) {
    throw InvalidParameterError(prefix + e.what());
  } catch (const IndexMismatchError& e) {
    throw IndexMismatchError(prefix + e.what());
  } catch (const NotEstimatedError& e) {
    throw NotEstimatedError(prefix + e.what());
  } catch (const ShapeMismatchError& e) {
    throw ShapeMismatchError(prefix + e.what());
  } catch (const MissingNormalsError& e) {
    throw MissingNormalsError(prefix + e.what());
  } catch (const InvalidLabelError& e) {
    throw InvalidLabelError(prefix + e.what());
  } catch (const DatasetNotFoundError& e) {
    throw DatasetNotFoundError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace mcconv
