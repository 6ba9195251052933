#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "autostat/bessel.hpp"
#include "autostat/eval.hpp"
#include "autostat/kernel.hpp"
#include "autostat/parse.hpp"
#include "oracles.hpp"

using namespace autostat;

TEST_CASE("scaled Bessel functions match high-precision references") {
  // Reference values computed with 30-digit arithmetic; the pairs bracket
  // the series/asymptotic switchover.
  struct Ref {
    double x, i0e, i1e;
  };
  const std::vector<Ref> refs = {
      {0.001, 0.9990007495835155594, 0.00049950031235422133698},
      {0.1, 0.90710092578230109644, 0.045298446808809325007},
      {0.5, 0.64503527044915006811, 0.15642080318487169714},
      {1.0, 0.4657596075936404365, 0.20791041534970844887},
      {2.0, 0.30850832255367103953, 0.21526928924893765916},
      {5.0, 0.18354081260932835307, 0.16397226694454235693},
      {10.0, 0.12783333716342860732, 0.12126268138445551872},
      {19.9, 0.090008588864389594038, 0.087717102131706098075},
      {20.1, 0.089553763620613447243, 0.08729685184320159495},
      {50.0, 0.05656162664745419253, 0.055993123892895399644},
      {200.0, 0.02822715994911191567, 0.028156503394832917822},
      {1000.0, 0.012617240455891256586, 0.01261093025692862947},
  };
  for (const auto& r : refs) {
    CAPTURE(r.x);
    CHECK(bessel_i0e(r.x) == Catch::Approx(r.i0e).epsilon(5e-13));
    CHECK(bessel_i1e(r.x) == Catch::Approx(r.i1e).epsilon(5e-13));
  }
}

TEST_CASE("kernel evaluation matches independent formula transliterations") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> xd(-2.0, 2.0);
  for (int trial = 0; trial < 80; ++trial) {
    KernelExpr e = oracle::random_expr(rng, 3);
    CAPTURE(print_kernel(e));
    for (int pair = 0; pair < 10; ++pair) {
      double x = xd(rng);
      double xp = (pair % 4 == 0) ? x : xd(rng);
      double lib = eval_kernel(e, x, xp);
      double ref = oracle::ref_eval(e, x, xp);
      CHECK(oracle::close_rel(lib, ref, 1e-9));
    }
  }
}

TEST_CASE("periodic kernel: scaled-Bessel route agrees with the textbook form") {
  // Direct cancellation test of the numerically stable evaluation against
  // exp/I0 arithmetic over a grid of lengthscales and distances.
  for (double l : {0.3, 0.7, 1.0, 2.0, 3.0}) {
    for (double d : {0.0, 0.1, 0.5, 1.3, 2.9}) {
      double lib = eval_kernel(per(1.7, l, 2.1), d, 0.0);
      double ref = oracle::ref_periodic(1.7, l, 2.1, d, 0.0);
      CAPTURE(l, d);
      CHECK(oracle::close_rel(lib, ref, 1e-11));
    }
  }
}

TEST_CASE("periodic kernel degrades continuously into a cosine") {
  // Below the branch threshold the kernel is exactly the cosine limit.
  double l_small_u = 2000.0;  // u = 2.5e-7 < 1e-6
  double k = eval_kernel(per(1.3, l_small_u, 2.0), 0.7, 0.0);
  double c = 1.3 * std::cos(2.0 * oracle::ref_two_pi / 2.0 * 0.35);
  CHECK(k == Catch::Approx(c).epsilon(1e-15));

  // Just above the threshold the Bessel route is within O(u) of the cosine.
  double l_above = 900.0;  // u ~ 1.23e-6
  double ka = eval_kernel(per(1.3, l_above, 2.0), 0.7, 0.0);
  CHECK(ka == Catch::Approx(c).margin(1e-4));
}

TEST_CASE("sigmoid and window masks have the advertised shape") {
  SigmoidParams s{1700.0, 50.0};
  CHECK(sigmoid_value(1700.0, s) == Catch::Approx(0.5));
  CHECK(sigmoid_value(1000.0, s) > 0.999);   // well before: ~1
  CHECK(sigmoid_value(2400.0, s) < 0.001);   // well after: ~0
  CHECK(sigmoid_value(1600.0, s) > sigmoid_value(1800.0, s));

  WindowParams w{1640.0, 1720.0, 5.0};
  CHECK(window_mask(1680.0, w) > 0.999);
  CHECK(window_mask(1500.0, w) < 0.001);
  CHECK(window_mask(1900.0, w) < 0.001);
  // Order of the stored locations must not matter.
  WindowParams wr{1720.0, 1640.0, 5.0};
  CHECK(window_mask(1680.0, wr) == window_mask(1680.0, w));
}

TEST_CASE("kernel matrices agree with scalar evaluation entrywise") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> xd(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    KernelExpr e = oracle::random_expr(rng, 3);
    std::vector<double> rows(6), cols(5);
    for (auto& v : rows) v = xd(rng);
    for (auto& v : cols) v = xd(rng);
    cols[2] = rows[1];  // force an exact coincidence for WN
    MatrixXd k = kernel_matrix(e, rows, cols);
    CAPTURE(print_kernel(e));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 5; ++j)
        CHECK(oracle::close_rel(k(i, j), eval_kernel(e, rows[i], cols[j]), 1e-12));
  }
}

TEST_CASE("term matrices agree with scalar term evaluation") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> xd(-2.0, 2.0);
  for (int trial = 0; trial < 30; ++trial) {
    KernelExpr e = oracle::random_expr(rng, 3);
    NormalForm nf = to_normal_form(e);
    std::vector<double> rows(5), cols(4);
    for (auto& v : rows) v = xd(rng);
    for (auto& v : cols) v = xd(rng);
    cols[0] = rows[0];
    for (const auto& t : nf.terms) {
      MatrixXd k = term_matrix(t, rows, cols);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j)
          CHECK(oracle::close_rel(k(i, j), eval_term(t, rows[i], cols[j]), 1e-12));
    }
  }
}

namespace {

// Central-difference gradient of one Gram entry with respect to packed
// parameter p.
MatrixXd fd_gradient(const KernelExpr& e, const std::vector<double>& xs,
                     size_t p, double h) {
  std::vector<double> packed = pack_params(e);
  KernelExpr hi = e, lo = e;
  std::vector<double> ph = packed, pl = packed;
  ph[p] += h;
  pl[p] -= h;
  set_packed_params(hi, ph);
  set_packed_params(lo, pl);
  return (kernel_matrix(hi, xs, xs) - kernel_matrix(lo, xs, xs)) / (2.0 * h);
}

}  // namespace

TEST_CASE("analytic kernel gradients match finite differences") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> xd(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    KernelExpr e = oracle::random_expr(rng, 2);
    std::vector<double> xs(7);
    for (auto& v : xs) v = xd(rng);
    KernelGradients kg = kernel_gradients(e, xs);
    const size_t np = pack_params(e).size();
    REQUIRE(kg.grads.size() == np);
    CAPTURE(print_kernel(e));
    for (size_t p = 0; p < np; ++p) {
      MatrixXd fd = fd_gradient(e, xs, p, 1e-6);
      CAPTURE(p);
      for (int i = 0; i < fd.rows(); ++i)
        for (int j = 0; j < fd.cols(); ++j)
          CHECK(oracle::close_rel(kg.grads[p](i, j), fd(i, j), 2e-5, 1.0));
    }
  }
}

TEST_CASE("changewindow gradients stay correct when locations cross") {
  // The optimizer can drive location1 past location2; evaluation sorts them
  // and the gradient slots must swap accordingly.
  WindowParams w{1.5, -0.8, 0.9};  // stored in reversed order
  KernelExpr e = changewindow(se(1.2, 0.7), constant(0.6), w);
  std::vector<double> xs = {-1.7, -0.9, -0.2, 0.4, 1.1, 1.8};
  KernelGradients kg = kernel_gradients(e, xs);
  const size_t np = pack_params(e).size();
  REQUIRE(kg.grads.size() == np);
  for (size_t p = 0; p < np; ++p) {
    MatrixXd fd = fd_gradient(e, xs, p, 1e-6);
    CAPTURE(p);
    for (int i = 0; i < fd.rows(); ++i)
      for (int j = 0; j < fd.cols(); ++j)
        CHECK(oracle::close_rel(kg.grads[p](i, j), fd(i, j), 2e-5, 1.0));
  }
}

TEST_CASE("gradient count and order track the packed parameter vector") {
  KernelExpr e = parse_kernel("CP(SE(2,3), LIN(4,5); 0.2, 1.5)");
  std::vector<double> xs = {-1.0, 0.0, 0.5, 1.3};
  KernelGradients kg = kernel_gradients(e, xs);
  REQUIRE(kg.grads.size() == 6);
  // Slot 0 is the changepoint location (identity transform): compare against
  // FD in that coordinate specifically.
  MatrixXd fd = fd_gradient(e, xs, 0, 1e-6);
  for (int i = 0; i < fd.rows(); ++i)
    for (int j = 0; j < fd.cols(); ++j)
      CHECK(oracle::close_rel(kg.grads[0](i, j), fd(i, j), 2e-5, 1.0));
}

TEST_CASE("factorization applies escalating jitter and reports failures") {
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(i * 0.1);

  // Healthy kernel: minimal jitter level suffices.
  FactoredGram g = gram_matrix(se(1.0, 1.0) + wn(0.1), xs);
  CHECK(g.jitter <= 1.1e-9 * g.k.trace() / 30.0);
  CHECK(g.llt.info() == Eigen::Success);

  // Rank-one constant kernel: needs jitter but must still factor.
  FactoredGram gc = gram_matrix(constant(1.0), xs);
  CHECK(gc.llt.info() == Eigen::Success);

  // Non-finite entries are a hard error.
  MatrixXd bad = MatrixXd::Constant(3, 3, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(factor_with_jitter(bad), factorization_error);
}

TEST_CASE("factored gram solves reproduce the oracle inverse") {
  // Cross-check Eigen's Cholesky against the hand-rolled LU oracle.
  std::vector<double> xs = {0.0, 0.3, 0.7, 1.1, 1.6, 2.0, 2.8};
  const size_t n = xs.size();
  KernelExpr e = se(1.3, 0.8) + wn(0.2);
  FactoredGram g = gram_matrix(e, xs);

  oracle::Mat k(n, oracle::Vec(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) k[i][j] = g.k(i, j);
  oracle::Lu lu = oracle::lu_decompose(k);

  VectorXd rhs(n);
  for (size_t i = 0; i < n; ++i) rhs[i] = std::sin(1.7 * xs[i]);
  VectorXd x_eigen = g.llt.solve(rhs);
  oracle::Vec rhs_o(n);
  for (size_t i = 0; i < n; ++i) rhs_o[i] = rhs[i];
  oracle::Vec x_oracle = oracle::lu_solve(lu, rhs_o);
  for (size_t i = 0; i < n; ++i)
    CHECK(x_eigen[i] == Catch::Approx(x_oracle[i]).margin(1e-9));

  // log-determinants agree too.
  double logdet_eigen =
      2.0 * g.llt.matrixLLT().diagonal().array().log().sum();
  CHECK(logdet_eigen == Catch::Approx(oracle::lu_logdet(lu)).margin(1e-10));
}
