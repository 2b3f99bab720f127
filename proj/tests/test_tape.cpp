#include <doctest.h>

#include <cmath>
#include <numbers>

#include "slan/error.hpp"
#include "slan/gradcheck.hpp"
#include "slan/tape.hpp"
#include "support.hpp"

using namespace slan;
using namespace slan::ad;
using testing::random_tensor;

namespace {

// Central-difference check of a single-input op through sum(op(x) * r) with a
// fixed random weighting r, so every output entry contributes.
GradCheckReport op_check(const std::function<Var(std::span<const Var>)>& op,
                         std::vector<Tensor> inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor weights;
  {
    Tape probe;
    std::vector<Var> vs;
    for (const Tensor& t : inputs) vs.push_back(probe.param(t));
    const Tensor& out = probe.value(op(vs));
    weights = random_tensor(out.rows, out.cols, rng);
  }
  std::vector<Tensor*> ptrs;
  for (Tensor& t : inputs) ptrs.push_back(&t);
  return check_gradients(
      [&](Tape& tape, std::span<const Var> vs) {
        return sum(hadamard(op(vs), tape.input(weights)));
      },
      ptrs, 1e-6, 1e-6);
}

}  // namespace

TEST_SUITE("diffcore") {

TEST_CASE("matmul: identity and naive oracle") {
  std::mt19937_64 rng(1);
  Tape tape;
  Tensor eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
  const Tensor x = random_tensor(3, 1, rng);
  CHECK(tape.value(matmul(tape.input(eye), tape.input(x))) == x);

  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = random_tensor(3, 4, rng), b = random_tensor(4, 2, rng);
    const Tensor got = tape.value(matmul(tape.input(a), tape.input(b)));
    const Tensor want = testing::naive_matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-14);
    const Tensor v = random_tensor(4, 1, rng);
    const Tensor gv = tape.value(matmul(tape.input(a), tape.input(v)));
    const Tensor wv = testing::naive_matmul(a, v);
    for (std::size_t i = 0; i < gv.size(); ++i) CHECK(std::abs(gv[i] - wv[i]) <= 1e-14);
  }
}

TEST_CASE("shape mismatch names both shapes") {
  Tape tape;
  const Var a = tape.input(Tensor(2, 3)), b = tape.input(Tensor(2, 3));
  try {
    matmul(a, b);
    FAIL("expected shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
    const std::string msg = e.what();
    CHECK(msg.find("(2x3)") != std::string::npos);
  }
  CHECK_THROWS_AS(add(tape.input(Tensor(2, 1)), tape.input(Tensor(3, 1))), Error);
  CHECK_THROWS_AS(slice(tape.input(Tensor(2, 1)), 1, 2), Error);
}

TEST_CASE("hadamard with zero gives zero value and zero gradient") {
  Tape tape;
  Tensor a = Tensor::column({1.0, -2.0, 3.0});
  const Var va = tape.param(a);
  const Var out = sum(hadamard(va, tape.input(Tensor(3, 1))));
  CHECK(tape.scalar(out) == 0.0);
  tape.backward(out);
  CHECK(tape.grad(va) == Tensor(3, 1));
}

TEST_CASE("elementwise values at zero") {
  Tape tape;
  const Var z = tape.input(Tensor::scalar(0.0));
  CHECK(tape.scalar(sigmoid(z)) == 0.5);
  const Var t = tanh(z);
  CHECK(tape.scalar(t) == 0.0);
  CHECK(tape.scalar(sin(z)) == 0.0);
  Tape t2;
  Tensor x = Tensor::scalar(0.0);
  const Var vx = t2.param(x);
  t2.backward(tanh(vx));
  CHECK(t2.grad(vx)[0] == 1.0);
}

TEST_CASE("cross-entropy: ln 2 at zero logits, stable at large logits") {
  Tape tape;
  CHECK(tape.scalar(cross_entropy(tape.input(Tensor::column({0.0, 0.0})), 0)) ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  const double big = tape.scalar(cross_entropy(tape.input(Tensor::column({1000.0, 0.0})), 0));
  CHECK(std::isfinite(big));
  CHECK(big < 1e-300);
  const double wrong = tape.scalar(cross_entropy(tape.input(Tensor::column({1000.0, 0.0})), 1));
  CHECK(wrong == doctest::Approx(1000.0));
  const Tensor& w = tape.value(softmax(tape.input(Tensor::column({3.0, -1.0, 0.5}))));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("op-level gradients match central differences to 1e-6") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(100 + trial);
    auto r = [&](std::size_t a, std::size_t b, double lo = -1.0, double hi = 1.0) {
      return random_tensor(a, b, rng, lo, hi);
    };
    CHECK(op_check([](auto v) { return matmul(v[0], v[1]); }, {r(3, 4), r(4, 2)}, trial).pass);
    CHECK(op_check([](auto v) { return matmul(v[0], v[1]); }, {r(3, 4), r(4, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return add(v[0], v[1]); }, {r(3, 2), r(3, 2)}, trial).pass);
    CHECK(op_check([](auto v) { return sub(v[0], v[1]); }, {r(3, 2), r(3, 2)}, trial).pass);
    CHECK(op_check([](auto v) { return hadamard(v[0], v[1]); }, {r(4, 1), r(4, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return scale(v[0], -1.7); }, {r(4, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return concat_rows(v); }, {r(2, 1), r(3, 1), r(1, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return slice(v[0], 1, 3); }, {r(5, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return sigmoid(v[0]); }, {r(5, 1, -3, 3)}, trial).pass);
    CHECK(op_check([](auto v) { return tanh(v[0]); }, {r(5, 1, -3, 3)}, trial).pass);
    CHECK(op_check([](auto v) { return sin(v[0]); }, {r(5, 1, -3, 3)}, trial).pass);
    CHECK(op_check([](auto v) { return softmax(v[0]); }, {r(4, 1, -3, 3)}, trial).pass);
    CHECK(op_check([](auto v) { return cross_entropy(v[0], 1); }, {r(2, 1, -3, 3)}, trial).pass);
    CHECK(op_check([](auto v) { return mean_of(v); }, {r(3, 1), r(3, 1), r(3, 1)}, trial).pass);
    CHECK(op_check([](auto v) { return max_of(v); }, {r(3, 1), r(3, 1)}, trial).pass);
    CHECK(op_check(
              [](auto v) {
                const Var items[] = {v[1], v[2]};
                return weighted_sum(softmax(v[0]), items);
              },
              {r(2, 1), r(3, 1), r(3, 1)}, trial)
              .pass);
  }
}

TEST_CASE("backward: sum gives all-ones, unreachable params get zero, second call rejected") {
  Tape tape;
  Tensor a(2, 3, 0.7), b(2, 1, 1.0);
  const Var va = tape.param(a), vb = tape.param(b);
  const Var root = sum(va);
  tape.backward(root);
  CHECK(tape.grad(va) == Tensor(2, 3, 1.0));
  CHECK(tape.grad(vb) == Tensor(2, 1, 0.0));
  CHECK_THROWS_AS(tape.backward(root), Error);
  Tape t2;
  CHECK_THROWS_AS(t2.backward(t2.input(Tensor(2, 1))), Error);
}

TEST_CASE("backward does not mutate forward values and replays identically") {
  std::mt19937_64 rng(4);
  Tensor w = random_tensor(3, 3, rng), x = random_tensor(3, 1, rng);
  auto run = [&](Tensor& value_out, Tensor& grad_out) {
    Tape tape;
    const Var vw = tape.param(w);
    const Var h = tanh(matmul(vw, tape.input(x)));
    const Tensor before = tape.value(h);
    tape.backward(sum(hadamard(h, h)));
    CHECK(tape.value(h) == before);
    value_out = before;
    grad_out = tape.grad(vw);
  };
  Tensor v1, g1, v2, g2;
  run(v1, g1);
  run(v2, g2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("non-finite outputs are rejected") {
  Tape tape;
  const Var big = tape.input(Tensor::scalar(1e308));
  try {
    add(big, big);
    FAIL("expected numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numeric);
  }
}

TEST_CASE("check_gradients: quadratic exact, corrupted adjoint fails") {
  std::mt19937_64 rng(9);
  Tensor w = random_tensor(5, 1, rng);
  Tensor* ps[] = {&w};
  const auto good = check_gradients(
      [](Tape&, std::span<const Var> v) { return sum(hadamard(v[0], v[0])); }, ps, 1e-4, 1e-9);
  CHECK(good.pass);
  CHECK(good.max_rel_error <= 1e-9);

  // Forward doubles its input but the adjoint claims gradient 1.
  const auto bad = check_gradients(
      [](Tape& tape, std::span<const Var> v) {
        Tensor out = tape.value(v[0]);
        for (double& d : out.data) d *= 2.0;
        const Var doubled = custom(
            std::span<const Var>(v.data(), 1), out,
            [](std::span<const Tensor* const>, const Tensor&, const Tensor& g,
               std::span<Tensor* const> gi) {
              for (std::size_t i = 0; i < g.size(); ++i) (*gi[0])[i] += g[i];
            });
        return sum(doubled);
      },
      ps, 1e-6, 1e-6);
  CHECK_FALSE(bad.pass);
  CHECK(relative_error(3.0, 1.0) == doctest::Approx(2.0 / 3.0));
}

}  // TEST_SUITE
