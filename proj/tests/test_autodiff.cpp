#include <catch2/catch_amalgamated.hpp>

#include "agnn/autodiff.hpp"
#include "agnn/graph.hpp"
#include "agnn/optim.hpp"
#include "test_util.hpp"

using namespace agnn;

TEST_CASE("sum of a parameter backpropagates all-ones", "[autodiff]") {
  ParamTensor w("w", 2, 2);
  w.value << 1, 2, 3, 4;
  Tape tape;
  tape.backward(tape.sum(tape.leaf(w)));
  REQUIRE(w.grad == Mat::Ones(2, 2));
}

TEST_CASE("frobenius norm squared gives 2W", "[autodiff]") {
  ParamTensor w("w", 2, 2);
  w.value << 1, 2, 3, 4;
  Tape tape;
  tape.backward(tape.frobenius_sq(tape.leaf(w)));
  Mat expected(2, 2);
  expected << 2, 4, 6, 8;
  REQUIRE(w.grad == expected);
}

TEST_CASE("two uses of one parameter accumulate", "[autodiff]") {
  ParamTensor w("w", 2, 2);
  w.value << 1, 2, 3, 4;
  Tape tape;
  const NodeId a = tape.leaf(w);
  tape.backward(tape.sum(tape.add(a, a)));
  REQUIRE(w.grad == 2.0 * Mat::Ones(2, 2));
}

TEST_CASE("backward demands a recorded scalar", "[autodiff]") {
  Tape tape;
  REQUIRE_THROWS_AS(tape.backward(0), ContractViolation);
  ParamTensor w("w", 2, 2);
  Tape tape2;
  const NodeId leaf = tape2.leaf(w);
  REQUIRE_THROWS_AS(tape2.backward(leaf), ContractViolation);
}

TEST_CASE("backward is deterministic bit for bit", "[autodiff]") {
  Rng rng(3);
  const Graph g = agnn_test::random_graph(rng, 12, 0.3);
  const NormalizedOperators ops = normalize(g);
  const Mat x = agnn_test::random_mat(rng, 12, 4);

  auto run = [&](Mat& out_grad) {
    ParamTensor w("w", 4, 3);
    Rng init(99);
    glorot_init(w, init);
    Tape tape;
    const NodeId y = tape.tanh(
        tape.spmm(ops.a_hat, tape.matmul(tape.constant(x), tape.leaf(w))));
    tape.backward(tape.frobenius_sq(y));
    out_grad = w.grad;
  };
  Mat g1, g2;
  run(g1);
  run(g2);
  REQUIRE(g1 == g2);
}

TEST_CASE("spmm gradient flows only into the dense operand", "[autodiff]") {
  Rng rng(5);
  const Graph g = agnn_test::random_graph(rng, 10, 0.4);
  const NormalizedOperators ops = normalize(g);
  const Mat x = agnn_test::random_mat(rng, 10, 3);
  const std::vector<double> a_hat_before = ops.a_hat.val;

  ParamTensor w("w", 3, 2);
  glorot_init(w, rng);
  std::vector<ParamTensor*> params{&w};

  auto f = [&](bool with_grad) {
    Tape tape;
    const NodeId y =
        tape.spmm(ops.a_hat, tape.matmul(tape.constant(x), tape.leaf(w)));
    const NodeId loss = tape.frobenius_sq(y);
    if (with_grad) {
      zero_grads(params);
      tape.backward(loss);
    }
    return tape.value(loss)(0, 0);
  };
  REQUIRE(grad_check(f, params, 1e-5) < 1e-6);
  REQUIRE(ops.a_hat.val == a_hat_before);
}

TEST_CASE("tape op battery passes finite differences", "[autodiff]") {
  // matmul, add, sub, scale, bias, tanh, softmax and the masked loss, all in
  // one graph; everything here is smooth.
  Rng rng(17);
  const int n = 6, d = 4, r = 3;
  const Mat x = agnn_test::random_mat(rng, n, d);
  ParamTensor w("w", d, r), b("b", 1, r, false), u("u", d, r);
  glorot_init(w, rng);
  glorot_init(u, rng);
  std::vector<ParamTensor*> params{&w, &b, &u};
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  const std::vector<int> omega{0, 2, 3, 5};

  auto f = [&](bool with_grad) {
    Tape tape;
    const NodeId xs = tape.constant(x);
    NodeId logits =
        tape.add_row_bias(tape.matmul(xs, tape.leaf(w)), tape.leaf(b));
    logits = tape.sub(tape.scale(logits, 1.7),
                      tape.scale(tape.matmul(xs, tape.leaf(u)), 0.4));
    const NodeId probs = tape.softmax_rows(tape.tanh(logits));
    const NodeId loss = tape.nll_masked(probs, labels, omega);
    if (with_grad) {
      zero_grads(params);
      tape.backward(loss);
    }
    return tape.value(loss)(0, 0);
  };
  REQUIRE(grad_check(f, params, 1e-5) < 1e-6);
}

TEST_CASE("adam: zero gradient leaves values alone", "[autodiff]") {
  ParamTensor w("w", 2, 2);
  w.value << 1, 2, 3, 4;
  const Mat before = w.value;
  adam_step(std::vector<ParamTensor*>{&w}, {.lr = 0.01, .weight_decay = 0.0});
  REQUIRE(w.value == before);
}

TEST_CASE("adam: first unit-gradient step moves by about -lr", "[autodiff]") {
  ParamTensor w("w", 1, 1);
  w.value(0, 0) = 0.3;
  w.grad(0, 0) = 1.0;
  adam_step(std::vector<ParamTensor*>{&w}, {.lr = 0.01, .weight_decay = 0.0});
  // bias correction makes m_hat = v_hat = 1 on the first step
  REQUIRE_THAT(w.value(0, 0), Catch::Matchers::WithinAbs(0.3 - 0.01, 1e-9));
  REQUIRE(w.grad(0, 0) == 0.0);
  REQUIRE(w.step_count == 1);
}

TEST_CASE("adam: weight decay couples into the gradient", "[autodiff]") {
  ParamTensor w("w", 1, 1);
  w.value(0, 0) = 1.0;
  adam_step(std::vector<ParamTensor*>{&w}, {.lr = 0.01, .weight_decay = 5e-4});
  // effective gradient 5e-4 shows up in the first moment: m = 0.1 * 5e-4
  REQUIRE_THAT(w.adam_m(0, 0), Catch::Matchers::WithinAbs(0.1 * 5e-4, 1e-18));

  ParamTensor bias("bias", 1, 1, false);
  bias.value(0, 0) = 1.0;
  adam_step(std::vector<ParamTensor*>{&bias},
            {.lr = 0.01, .weight_decay = 5e-4});
  REQUIRE(bias.value(0, 0) == 1.0);  // decay=false opts out
}

TEST_CASE("adam aborts on non-finite gradients, naming the tensor",
          "[autodiff]") {
  ParamTensor w("block1.w_g", 1, 1);
  w.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_MATCHES(
      adam_step(std::vector<ParamTensor*>{&w}, {}), NumericError,
      Catch::Matchers::MessageMatches(
          Catch::Matchers::ContainsSubstring("block1.w_g")));
}

TEST_CASE("grad_check agrees with calculus on x^2", "[autodiff]") {
  ParamTensor x("x", 1, 1);
  x.value(0, 0) = 3.0;
  std::vector<ParamTensor*> params{&x};
  auto f = [&](bool with_grad) {
    Tape tape;
    const NodeId loss = tape.frobenius_sq(tape.leaf(x));
    if (with_grad) {
      zero_grads(params);
      tape.backward(loss);
    }
    return tape.value(loss)(0, 0);
  };
  REQUIRE(grad_check(f, params, 1e-5) < 1e-6);
  REQUIRE_THAT(x.grad(0, 0), Catch::Matchers::WithinAbs(6.0, 1e-12));
}

TEST_CASE("grad_check sees the middle-band msrelu slope", "[autodiff]") {
  const MsreluParams p = make_msrelu(0.05, 0.10);
  ParamTensor z("z", 1, 1);
  z.value(0, 0) = 0.07;  // well inside (theta1, theta2)
  std::vector<ParamTensor*> params{&z};
  auto f = [&](bool with_grad) {
    Tape tape;
    const NodeId loss = tape.sum(tape.msrelu(tape.leaf(z), p));
    if (with_grad) {
      zero_grads(params);
      tape.backward(loss);
    }
    return tape.value(loss)(0, 0);
  };
  REQUIRE(grad_check(f, params, 1e-5) < 1e-6);
  REQUIRE_THAT(z.grad(0, 0), Catch::Matchers::WithinAbs(1.5, 1e-12));
}

TEST_CASE("grad_check on a constant function is zero", "[autodiff]") {
  ParamTensor x("x", 2, 2);
  x.value.setConstant(0.4);
  std::vector<ParamTensor*> params{&x};
  auto f = [&](bool with_grad) {
    if (with_grad) zero_grads(params);
    return 1.25;
  };
  REQUIRE(grad_check(f, params, 1e-5) == 0.0);
}

TEST_CASE("zero_grads clears exactly", "[autodiff]") {
  ParamTensor w("w", 3, 3);
  w.grad.setConstant(2.5);
  std::vector<ParamTensor*> params{&w};
  zero_grads(params);
  REQUIRE(w.grad == Mat::Zero(3, 3));
}
