#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mint/autodiff.hpp"
#include "mint/nets.hpp"
#include "test_util.hpp"

#include <functional>

using namespace mint;

namespace {

// Generic finite-difference check: builds the graph twice per perturbed
// coordinate and compares against the backward pass.
void check_gradients(const std::function<ad::Var(ad::Tape&, const std::vector<Mat>&)>& build,
                     std::vector<Mat> inputs, double h = 1e-6, double tol = 1e-6) {
  ad::Tape tape;
  ad::Var root = build(tape, inputs);
  REQUIRE(root.rows() == 1);
  REQUIRE(root.cols() == 1);
  tape.backward(root);

  // leaves are created first, in input order, by the builder contract
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Mat analytic = ad::Var(&tape, static_cast<int>(k)).grad();
    for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
        auto eval = [&](double x) {
          std::vector<Mat> shifted = inputs;
          shifted[k](i, j) = x;
          ad::Tape t2;
          return build(t2, shifted).scalar();
        };
        const double numeric = testutil::central_diff(eval, inputs[k](i, j), h);
        CAPTURE(k);
        CAPTURE(i);
        CAPTURE(j);
        CHECK(testutil::grad_rel_err(analytic(i, j), numeric) < tol);
      }
    }
  }
}

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, scale);
  }
  return m;
}

}  // namespace

TEST_CASE("arithmetic ops match finite differences") {
  Rng rng(7);
  std::vector<Mat> in{random_mat(rng, 3, 4), random_mat(rng, 3, 4)};
  check_gradients(
      [](ad::Tape& t, const std::vector<Mat>& xs) {
        ad::Var a = t.leaf(xs[0]);
        ad::Var b = t.leaf(xs[1]);
        return ad::sum(ad::cmul(ad::add(a, b), ad::sub(a, ad::scale(b, 0.7))));
      },
      in);
}

TEST_CASE("matmul and linear layer match finite differences") {
  Rng rng(11);
  std::vector<Mat> in{random_mat(rng, 3, 4), random_mat(rng, 4, 2), random_mat(rng, 1, 2)};
  check_gradients(
      [](ad::Tape& t, const std::vector<Mat>& xs) {
        ad::Var x = t.leaf(xs[0]);
        ad::Var w = t.leaf(xs[1]);
        ad::Var b = t.leaf(xs[2]);
        return ad::sum(ad::square(ad::add_rowvec(ad::matmul(x, w), b)));
      },
      in);
}

TEST_CASE("nonlinearities match finite differences") {
  Rng rng(13);
  std::vector<Mat> in{random_mat(rng, 4, 3)};
  check_gradients(
      [](ad::Tape& t, const std::vector<Mat>& xs) {
        ad::Var x = t.leaf(xs[0]);
        ad::Var y = ad::add(ad::sigmoid(x), ad::tanh_(x));
        y = ad::add(y, ad::softplus(x));
        y = ad::add(y, ad::exp_(ad::scale(x, 0.3)));
        y = ad::add(y, ad::log_(ad::add_const(ad::square(x), 1.0)));
        return ad::sum(y);
      },
      in);
}

TEST_CASE("relu gradient away from the kink") {
  Rng rng(17);
  Mat x = random_mat(rng, 4, 4);
  // keep all entries away from zero so the finite difference is clean
  x = x.unaryExpr([](double v) { return std::abs(v) < 0.2 ? (v < 0 ? v - 0.3 : v + 0.3) : v; });
  check_gradients(
      [](ad::Tape& t, const std::vector<Mat>& xs) {
        return ad::sum(ad::relu(t.leaf(xs[0])));
      },
      {x});
}

TEST_CASE("reductions, gathers, concat and stacking match finite differences") {
  Rng rng(19);
  std::vector<Mat> in{random_mat(rng, 5, 3), random_mat(rng, 5, 2)};
  check_gradients(
      [](ad::Tape& t, const std::vector<Mat>& xs) {
        ad::Var a = t.leaf(xs[0]);
        ad::Var b = t.leaf(xs[1]);
        ad::Var joined = ad::hcat(a, b);                  // 5 x 5
        ad::Var picked = ad::rows(joined, {0, 2, 2, 4});  // duplicate gather
        ad::Var sliced = ad::slice_cols(picked, 1, 3);
        ad::Var other = ad::slice_cols(ad::rows(joined, {1, 3, 0, 0}), 0, 3);
        ad::Var stacked = ad::vcat({sliced, other});
        return ad::sum(ad::square(ad::rowsum(stacked)));
      },
      in);
}

TEST_CASE("sparse matmul matches finite differences") {
  Rng rng(23);
  std::vector<Eigen::Triplet<double>> trips{{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 0.5}, {2, 1, 0.5}};
  auto sp = std::make_shared<SpMat>(3, 3);
  sp->setFromTriplets(trips.begin(), trips.end());
  std::vector<Mat> in{random_mat(rng, 3, 2)};
  check_gradients(
      [sp](ad::Tape& t, const std::vector<Mat>& xs) {
        return ad::sum(ad::square(ad::spmm(sp, t.leaf(xs[0]))));
      },
      in);
}

TEST_CASE("gru cell gradients match finite differences") {
  Rng rng(29);
  ParamStore ps;
  GruCell cell("g", 3, 4);
  cell.init(ps, rng);
  const Mat x = random_mat(rng, 2, 3);
  const Mat h0 = random_mat(rng, 2, 4);

  auto run = [&](ParamStore& params, std::map<std::string, Mat>* grads) {
    ForwardCtx ctx(&params);
    ad::Var h = cell.step(ctx, ctx.constant(x), ctx.constant(h0));
    ad::Var loss = ad::sum(ad::square(h));
    if (grads) {
      ctx.tape().backward(loss);
      *grads = ctx.param_grads();
    }
    return loss.scalar();
  };
  bool ok = false;
  auto stats = testutil::check_param_gradients(run, ps, 1e-6, 1e-5, &ok);
  CHECK(ok);
  CHECK(stats.checked > 50);
}

TEST_CASE("backward accumulates over shared subexpressions") {
  ad::Tape tape;
  ad::Var x = tape.leaf(Mat::Constant(1, 1, 3.0));
  ad::Var y = ad::cmul(x, x);  // x^2, both parents are x
  ad::Var z = ad::add(y, x);   // x^2 + x
  tape.backward(z);
  CHECK(x.grad()(0, 0) == doctest::Approx(7.0));  // 2x + 1
}

TEST_CASE("clamp passes gradient only strictly inside the range") {
  ad::Tape tape;
  Mat v(1, 3);
  v << -9.0, 0.5, 9.0;
  ad::Var x = tape.leaf(v);
  ad::Var c = ad::clamp(x, -8.0, 8.0);
  tape.backward(ad::sum(c));
  CHECK(x.grad()(0, 0) == 0.0);
  CHECK(x.grad()(0, 1) == 1.0);
  CHECK(x.grad()(0, 2) == 0.0);
  CHECK(c.value()(0, 0) == -8.0);
  CHECK(c.value()(0, 2) == 8.0);
}

TEST_CASE("backward requires a scalar root") {
  ad::Tape tape;
  ad::Var x = tape.leaf(Mat::Zero(2, 2));
  CHECK_THROWS_AS(tape.backward(x), MintError);
}

TEST_CASE("shape mismatches are rejected") {
  ad::Tape tape;
  ad::Var a = tape.leaf(Mat::Zero(2, 2));
  ad::Var b = tape.leaf(Mat::Zero(3, 2));
  CHECK_THROWS_AS(ad::add(a, b), MintError);
  CHECK_THROWS_AS(ad::matmul(a, b), MintError);
  CHECK_THROWS_AS(ad::rows(a, {0, 5}), MintError);
}
