#ifndef PLANK_RESULT_H
#define PLANK_RESULT_H

#include <utility>
#include <variant>
#include <vector>

namespace plank {

// Either a value or a nonempty list of diagnostics.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}  // NOLINT
  Result(std::vector<E> errors)                                      // NOLINT
      : v_(std::in_place_index<1>, std::move(errors)) {}

  bool ok() const { return v_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<0>(v_); }
  T& value() & { return std::get<0>(v_); }
  T&& value() && { return std::get<0>(std::move(v_)); }

  const std::vector<E>& errors() const { return std::get<1>(v_); }

 private:
  std::variant<T, std::vector<E>> v_;
};

}  // namespace plank

#endif  // PLANK_RESULT_H
