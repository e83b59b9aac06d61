#pragma once

// The three extension points of the library. An Optimizer turns data plus a
// per-example gradient into a weight vector; an Algorithm exposes train()
// and yields a Model; a Model makes predictions.

#include <concepts>
#include <span>

namespace mli {

/// Writes the gradient of one example's loss at w into `out`.
template <typename F>
concept GradientFunction = requires(const F& f, std::span<const double> w, std::span<const double> x, double y,
                                    std::span<double> out) {
    { f(w, x, y, out) };
};

template <typename M, typename Input>
concept Model = requires(const M& m, const Input& input) {
    { m.predict(input) };
};

/// train() over the given inputs (data, optionally labels, hyperparameters).
template <typename A, typename... Inputs>
concept Algorithm = requires(const A& a, const Inputs&... inputs) {
    { a.train(inputs...) };
};

}  // namespace mli
