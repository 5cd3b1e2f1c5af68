#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "agnn/boost.hpp"
#include "test_util.hpp"

using namespace agnn;

// Row-stochastic matrix with strictly positive entries.
static Mat random_prediction(Rng& rng, int n, int r) {
  Mat m = agnn_test::random_mat(rng, n, r);
  for (int i = 0; i < n; ++i) {
    m.row(i) = (m.row(i).array() - m.row(i).maxCoeff()).exp();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

// One-hot-ish prediction of the given class.
static Mat confident_prediction(int n, int r, const std::vector<int>& cls,
                                double p) {
  Mat m = Mat::Constant(n, r, (1.0 - p) / (r - 1));
  for (int i = 0; i < n; ++i) m(i, cls[i]) = p;
  return m;
}

TEST_CASE("weighted error: uniform, perfect, skewed", "[boost]") {
  const std::vector<int> labels{0, 1, 0, 1};
  const std::vector<int> omega{0, 1, 2, 3};
  const std::vector<double> uniform_pi(4, 0.25);

  Mat pred = confident_prediction(4, 2, {0, 1, 0, 0}, 0.9);  // node 3 wrong
  REQUIRE(weighted_error(pred, labels, uniform_pi, omega) == 0.25);

  Mat perfect = confident_prediction(4, 2, labels, 0.9);
  REQUIRE(weighted_error(perfect, labels, uniform_pi, omega) == 0.0);

  const std::vector<int> omega2{0, 1};
  const std::vector<double> skew{0.9, 0.1};
  Mat wrong0 = confident_prediction(4, 2, {1, 1, 0, 1}, 0.9);  // node 0 wrong
  REQUIRE_THAT(weighted_error(wrong0, labels, skew, omega2),
               Catch::Matchers::WithinAbs(0.9, 1e-15));

  REQUIRE_THROWS_AS(weighted_error(pred, labels, {}, {}), ContractViolation);
}

TEST_CASE("argmax ties break toward the lowest class", "[boost]") {
  Mat pred(1, 3);
  pred << 0.4, 0.4, 0.2;
  REQUIRE(argmax_row(pred, 0) == 0);
}

TEST_CASE("classifier weight: chance, arithmetic, clamping", "[boost]") {
  REQUIRE(classifier_weight(0.5, 2) == 0.0);
  REQUIRE_THAT(classifier_weight(0.25, 10),
               Catch::Matchers::WithinAbs(0.5 * std::log(3.0) + std::log(9.0),
                                          1e-12));
  REQUIRE_THAT(classifier_weight(0.25, 10),
               Catch::Matchers::WithinAbs(2.7465, 1e-4));
  const double capped = classifier_weight(0.0, 2);
  REQUIRE(std::isfinite(capped));
  REQUIRE(capped > 10.0);
  REQUIRE_THROWS_AS(classifier_weight(0.3, 1), ContractViolation);
}

TEST_CASE("classifier weight strictly decreases in the error", "[boost]") {
  double prev = classifier_weight(1e-6, 4);
  for (double e : {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999}) {
    const double cur = classifier_weight(e, 4);
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("sample weight updates follow the confidence ratio", "[boost]") {
  const double rho = 0.05, eps = 1e-4;
  const std::vector<int> labels{0};

  // correct with p=0.9: eta=9, factor max(1-9, rho)=rho; 0.25 -> 0.0125
  BoostState s = BoostState::uniform(std::vector<int>{0});
  s.pi[0] = 0.25;
  update_sample_weights(s, confident_prediction(1, 2, {0}, 0.9), labels, rho,
                        eps);
  REQUIRE_THAT(s.pi[0], Catch::Matchers::WithinAbs(0.0125, 1e-15));

  // wrong with p=0.6: eta=1.5, factor 2.5
  s.pi[0] = 1.0;
  update_sample_weights(s, confident_prediction(1, 2, {1}, 0.6), labels, rho,
                        eps);
  REQUIRE_THAT(s.pi[0], Catch::Matchers::WithinAbs(2.5, 1e-12));

  // correct with a uniform row (R=2): eta=1, factor max(0, rho)=rho
  s.pi[0] = 1.0;
  update_sample_weights(s, Mat::Constant(1, 2, 0.5), labels, rho, eps);
  REQUIRE_THAT(s.pi[0], Catch::Matchers::WithinAbs(rho, 1e-15));
}

TEST_CASE("weight updates depend on predictions only through the row",
          "[boost]") {
  Rng rng(3);
  const std::vector<int> labels{0, 1, 0, 1, 1};
  const std::vector<int> omega{1, 3};
  Mat pred = random_prediction(rng, 5, 2);
  Mat altered = pred;
  altered.row(0) = random_prediction(rng, 1, 2).row(0);  // outside omega
  altered.row(4) = random_prediction(rng, 1, 2).row(0);

  BoostState a = BoostState::uniform(omega);
  BoostState b = BoostState::uniform(omega);
  update_sample_weights(a, pred, labels, 0.05, 1e-4);
  update_sample_weights(b, altered, labels, 0.05, 1e-4);
  REQUIRE(a.pi == b.pi);
}

TEST_CASE("pi stays strictly positive through many rounds", "[boost]") {
  Rng rng(7);
  const int n = 12, r = 3;
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(uniform(rng, 0.0, 3.0));
  std::vector<int> omega{0, 2, 4, 6, 8, 10};
  BoostState s = BoostState::uniform(omega);
  for (int round = 0; round < 30; ++round) {
    update_sample_weights(s, random_prediction(rng, n, r), labels, 0.05, 1e-4);
    for (double pi : s.pi) REQUIRE(pi > 0.0);
  }
}

TEST_CASE("softmax normalization of classifier weights", "[boost]") {
  BoostState s;
  s.alphas = {0.0};
  s.betas = {0.0};
  normalize_classifier_weights(s);
  REQUIRE(s.alphas[0] == 0.5);
  REQUIRE(s.betas[0] == 0.5);

  s.alphas = {1.0, 1.0};
  s.betas = {1.0, 1.0};
  normalize_classifier_weights(s);
  for (double w : s.alphas) REQUIRE_THAT(w, Catch::Matchers::WithinAbs(0.25, 1e-15));
  for (double w : s.betas) REQUIRE_THAT(w, Catch::Matchers::WithinAbs(0.25, 1e-15));

  s.alphas = {std::log(2.0)};
  s.betas = {0.0};
  normalize_classifier_weights(s);
  REQUIRE_THAT(s.alphas[0], Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  REQUIRE_THAT(s.betas[0], Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-12));
}

TEST_CASE("aggregate forms the convex combination", "[boost]") {
  Mat a(1, 2), b(1, 2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  const std::vector<const Mat*> preds{&a, &b};
  const std::vector<double> weights{0.5, 0.5};
  const Mat s = aggregate(preds, weights);
  REQUIRE(s(0, 0) == 0.5);
  REQUIRE(s(0, 1) == 0.5);

  const std::vector<const Mat*> one{&a};
  const std::vector<double> w1{1.0};
  REQUIRE(aggregate(one, w1) == a);

  // identical classifiers: any normalized weights give that prediction back
  const std::vector<const Mat*> same{&a, &a, &a};
  const std::vector<double> w3{0.2, 0.5, 0.3};
  REQUIRE((aggregate(same, w3) - a).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("boost round: symmetric when both heads are perfect", "[boost]") {
  const std::vector<int> labels{0, 1, 0, 1};
  const std::vector<int> omega{0, 1, 2, 3};
  const Mat perfect = confident_prediction(4, 2, labels, 0.9);
  const std::vector<const Mat*> preds{&perfect, &perfect};
  const BoostRound round =
      run_boost_round(preds, labels, omega, 0.05, 1e-4, 2);
  REQUIRE_THAT(round.alphas[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE_THAT(round.betas[0], Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("boost round: the better head earns the larger weight", "[boost]") {
  Rng rng(11);
  const int n = 8, r = 4;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % r;
  const std::vector<int> omega{0, 1, 2, 3, 4, 5, 6, 7};
  const Mat chance = Mat::Constant(n, r, 1.0 / r);  // error (R-1)/R
  const Mat perfect = confident_prediction(n, r, labels, 0.85);
  const std::vector<const Mat*> preds{&chance, &perfect};
  const BoostRound round =
      run_boost_round(preds, labels, omega, 0.05, 1e-4, r);
  REQUIRE(round.betas[0] > round.alphas[0]);
  REQUIRE_THAT(round.alphas[0] + round.betas[0],
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("boost round copes with a single labeled node", "[boost]") {
  Rng rng(13);
  const std::vector<int> labels{1, 0, 0};
  const std::vector<int> omega{0};
  const Mat p1 = random_prediction(rng, 3, 2);
  const Mat p2 = random_prediction(rng, 3, 2);
  const std::vector<const Mat*> preds{&p1, &p2};
  const BoostRound round =
      run_boost_round(preds, labels, omega, 0.05, 1e-4, 2);
  REQUIRE(round.state.pi.size() == 1);
  REQUIRE(round.state.pi[0] > 0.0);
  REQUIRE_THAT(round.alphas[0] + round.betas[0],
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("aggregated S stays row-stochastic under fuzzing", "[boost]") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(uniform(rng, 0.0, 8.0));
    const int r = 2 + static_cast<int>(uniform(rng, 0.0, 4.0));
    const int t = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(uniform(rng, 0.0, r));
    labels[0] = r - 1;  // keep the top class present
    std::vector<int> omega;
    for (int i = 0; i < n; i += 2) omega.push_back(i);

    std::vector<Mat> preds;
    for (int k = 0; k < 2 * t; ++k) preds.push_back(random_prediction(rng, n, r));
    std::vector<const Mat*> pred_ptrs;
    for (const Mat& m : preds) pred_ptrs.push_back(&m);

    const BoostRound round =
        run_boost_round(pred_ptrs, labels, omega, 0.05, 1e-4, r);
    for (int i = 0; i < n; ++i) {
      REQUIRE(std::abs(round.s.row(i).sum() - 1.0) < 1e-10);
      for (int j = 0; j < r; ++j) {
        REQUIRE(round.s(i, j) > 0.0);
        REQUIRE(round.s(i, j) < 1.0);
      }
    }
    double total = 0.0;
    for (double w : round.weights) total += w;
    REQUIRE(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("permuting the nodes permutes S identically", "[boost]") {
  Rng rng(19);
  const int n = 9, r = 3, t = 2;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % r;
  std::vector<int> omega{0, 3, 4, 7};
  std::vector<Mat> preds;
  for (int k = 0; k < 2 * t; ++k) preds.push_back(random_prediction(rng, n, r));

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (i * 4 + 2) % n;  // a fixed permutation

  std::vector<int> labels_p(n);
  for (int i = 0; i < n; ++i) labels_p[perm[i]] = labels[i];
  std::vector<int> omega_p;
  for (int i : omega) omega_p.push_back(perm[i]);
  std::sort(omega_p.begin(), omega_p.end());
  std::vector<Mat> preds_p(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    preds_p[k].resize(n, r);
    for (int i = 0; i < n; ++i) preds_p[k].row(perm[i]) = preds[k].row(i);
  }

  std::vector<const Mat*> ptrs, ptrs_p;
  for (const Mat& m : preds) ptrs.push_back(&m);
  for (const Mat& m : preds_p) ptrs_p.push_back(&m);
  const BoostRound a = run_boost_round(ptrs, labels, omega, 0.05, 1e-4, r);
  const BoostRound b = run_boost_round(ptrs_p, labels_p, omega_p, 0.05, 1e-4, r);

  for (int i = 0; i < n; ++i)
    REQUIRE((a.s.row(i) - b.s.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
}
