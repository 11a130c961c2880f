#include <doctest.h>

#include "mdmc/barrier.hpp"
#include "mdmc/errors.hpp"
#include "support/generators.hpp"

#include <Eigen/Dense>

#include <random>

using namespace mdmc;

namespace {

CliqueTreePtr tree_of(const EmbeddingPtr& e) {
    return std::make_shared<const CliqueTree>(build_clique_tree(e));
}

EmbeddingPtr identity_embed(const SparsityPattern& g) {
    return std::make_shared<const ChordalEmbedding>(
        symbolic_embed(g, Ordering::identity(g.n())));
}

SparseSymMatrix eye(const PatternPtr& p) {
    SparseSymMatrix m(p);
    for (Index i = 0; i < p->n(); ++i) m.values()[p->entry_index(i, i)] = 1.0;
    return m;
}

SparsityPattern path3() {
    return SparsityPattern::build(3, std::vector<IndexPair>{{1, 0}, {2, 1}});
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("factor of the identity") {
    auto e = identity_embed(SparsityPattern::diagonal(4));
    auto t = tree_of(e);
    const auto f = factor_primal(eye(e->gt), t);
    CHECK(f.log_det() == 0.0);
    const auto x = reconstruct(f);
    for (Index i = 0; i < 4; ++i) CHECK(x.get(i, i) == doctest::Approx(1.0));
}

TEST_CASE("factor of 2I has log det 3 log 2") {
    auto e = identity_embed(SparsityPattern::diagonal(3));
    auto t = tree_of(e);
    SparseSymMatrix m = eye(e->gt);
    for (auto& v : m.values()) v *= 2.0;
    const auto f = factor_primal(m, t);
    CHECK(f.log_det() == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("factor log det matches the dense determinant on chordal patterns") {
    std::mt19937 gen(51);
    const auto e = testing::random_chordal(6, 0.5, gen);
    const auto t = tree_of(e);
    const SparseSymMatrix xd = testing::random_completable(e->gt, 0.9, gen);
    const auto f = factor_primal(xd, t);
    const double dense_logdet = std::log(xd.dense().determinant());
    CHECK(f.log_det() == doctest::Approx(dense_logdet).epsilon(1e-10));

    // reconstruct returns the factored matrix on the pattern
    const auto back = reconstruct(f);
    for (Index k = 0; k < xd.nnz(); ++k)
        CHECK(back.value(k) == doctest::Approx(xd.value(k)).epsilon(1e-12));
}

TEST_CASE("factor rejects indefinite input with a clique certificate") {
    auto e = identity_embed(path3());
    auto t = tree_of(e);
    SparseSymMatrix m = eye(e->gt);
    m.set(1, 1, -1.0);
    try {
        factor_primal(m, t);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& err) {
        CHECK(err.column() >= 0);
        CHECK(err.clique() >= 0);
    }
}

TEST_CASE("projected inverse of diagonal and identity") {
    auto e = identity_embed(SparsityPattern::diagonal(3));
    auto t = tree_of(e);
    SparseSymMatrix d = eye(e->gt);
    d.set(0, 0, 2.0);
    d.set(1, 1, 4.0);
    d.set(2, 2, 8.0);
    const auto z = projected_inverse(factor_primal(d, t));
    CHECK(z.get(0, 0) == doctest::Approx(0.5));
    CHECK(z.get(1, 1) == doctest::Approx(0.25));
    CHECK(z.get(2, 2) == doctest::Approx(0.125));

    const auto zi = projected_inverse(factor_primal(eye(e->gt), t));
    for (Index i = 0; i < 3; ++i) CHECK(zi.get(i, i) == doctest::Approx(1.0));
}

TEST_CASE("projected inverse equals the dense inverse on the pattern") {
    std::mt19937 gen(53);
    for (int trial = 0; trial < 10; ++trial) {
        const auto e = testing::random_chordal(8, 0.4, gen);
        const auto t = tree_of(e);
        const SparseSymMatrix x = testing::random_completable(e->gt, 0.8, gen);
        const auto z = projected_inverse(factor_primal(x, t));
        const Eigen::MatrixXd kd = x.dense().inverse();
        for (Index k = 0; k < z.nnz(); ++k) {
            const auto [i, j] = z.pattern().entry(k);
            CHECK(rel_err(z.value(k), kd(i, j)) < 1e-10);
        }
    }
}

TEST_CASE("hessian action: identity matrix returns the direction") {
    std::mt19937 gen(57);
    const auto e = testing::random_chordal(7, 0.4, gen);
    const auto t = tree_of(e);
    const auto f = factor_primal(eye(e->gt), t);
    const SparseSymMatrix y = testing::random_direction(e->gt, gen);
    const auto hy = hess_f_mvp(f, y);
    for (Index k = 0; k < y.nnz(); ++k)
        CHECK(hy.value(k) == doctest::Approx(y.value(k)).epsilon(1e-12));

    SparseSymMatrix zero(e->gt);
    const auto hz = hess_f_mvp(f, zero);
    for (const double v : hz.values()) CHECK(v == 0.0);
}

TEST_CASE("hessian action matches the dense triple product") {
    std::mt19937 gen(59);
    for (int trial = 0; trial < 10; ++trial) {
        const auto e = testing::random_chordal(8, 0.45, gen);
        const auto t = tree_of(e);
        const SparseSymMatrix x = testing::random_completable(e->gt, 0.8, gen);
        const SparseSymMatrix y = testing::random_direction(e->gt, gen);
        const auto f = factor_primal(x, t);
        const auto hy = hess_f_mvp(f, y);

        const Eigen::MatrixXd xi = x.dense().inverse();
        const Eigen::MatrixXd want = xi * y.dense() * xi;
        const double scale = want.cwiseAbs().maxCoeff();
        for (Index k = 0; k < hy.nnz(); ++k) {
            const auto [i, j] = hy.pattern().entry(k);
            CHECK(std::abs(hy.value(k) - want(i, j)) < 1e-9 * std::max(1.0, scale));
        }
    }
}

TEST_CASE("hessian action is self-adjoint") {
    std::mt19937 gen(61);
    const auto e = testing::random_chordal(9, 0.4, gen);
    const auto t = tree_of(e);
    const SparseSymMatrix x = testing::random_completable(e->gt, 0.7, gen);
    const auto f = factor_primal(x, t);
    for (int trial = 0; trial < 5; ++trial) {
        const SparseSymMatrix y1 = testing::random_direction(e->gt, gen);
        const SparseSymMatrix y2 = testing::random_direction(e->gt, gen);
        const double a = sym_dot(y1, hess_f_mvp(f, y2));
        const double b = sym_dot(y2, hess_f_mvp(f, y1));
        CHECK(rel_err(a, b) < 1e-12);
    }
}

TEST_CASE("completion of the identity and of a full pattern") {
    auto e = identity_embed(path3());
    auto t = tree_of(e);
    const auto f = complete_factor(eye(e->gt), t);
    const auto x = reconstruct(f);
    for (Index i = 0; i < 3; ++i) CHECK(x.get(i, i) == doctest::Approx(1.0));
    CHECK(x.get(1, 0) == doctest::Approx(0.0));

    // full pattern: X = S^{-1}
    std::mt19937 gen(63);
    auto full = identity_embed(SparsityPattern::full(4));
    auto tf = tree_of(full);
    const SparseSymMatrix s = testing::random_completable(full->gt, 0.8, gen);
    const auto xf = reconstruct(complete_factor(s, tf));
    const Eigen::MatrixXd want = s.dense().inverse();
    for (Index k = 0; k < xf.nnz(); ++k) {
        const auto [i, j] = xf.pattern().entry(k);
        CHECK(rel_err(xf.value(k), want(i, j)) < 1e-10);
    }
}

TEST_CASE("path completion has the acyclic closed form") {
    auto e = identity_embed(path3());
    auto t = tree_of(e);
    SparseSymMatrix s = eye(e->gt);
    s.set(1, 0, 0.5);
    s.set(2, 1, 0.5);
    const auto f = complete_factor(s, t);
    // W = X^{-1} is the max-determinant completion; its missing entry obeys
    // W_02 = W_01 W_12 / W_11 = 0.25
    const Eigen::MatrixXd w = reconstruct(f).dense().inverse();
    CHECK(w(0, 2) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w(1, 0) == doctest::Approx(0.5).epsilon(1e-12));

    // the dense oracle agrees
    const Eigen::MatrixXd wo = dense_maxdet_completion(s.dense(), s.pattern());
    CHECK(max_abs_diff(w, wo) < 1e-10);
}

TEST_CASE("completion satisfies its defining equation") {
    std::mt19937 gen(67);
    for (int trial = 0; trial < 10; ++trial) {
        const auto e = testing::random_chordal(10, 0.35, gen);
        const auto t = tree_of(e);
        const SparseSymMatrix s = testing::random_dual_point(e, 0.8, gen);
        const auto f = complete_factor(s, t);
        const SparseSymMatrix x = reconstruct(f);
        const Eigen::MatrixXd xi = x.dense().inverse();
        const double smax = 1e-10 * std::max(1.0, s.dense().cwiseAbs().maxCoeff());
        for (Index k = 0; k < s.nnz(); ++k) {
            const auto [i, j] = s.pattern().entry(k);
            CHECK(std::abs(xi(i, j) - s.value(k)) < smax);
        }
    }
}

TEST_CASE("completion rejects a clique violation with a certificate") {
    auto e = identity_embed(path3());
    auto t = tree_of(e);
    SparseSymMatrix s = eye(e->gt);
    s.set(1, 0, 1.5);  // 2x2 clique block [[1, 1.5], [1.5, 1]] is indefinite
    try {
        complete_factor(s, t);
        FAIL("expected NotCompletable");
    } catch (const NotCompletable& err) {
        CHECK(err.clique() >= 0);
    }
}

TEST_CASE("f_star values") {
    auto e = identity_embed(path3());
    auto t = tree_of(e);
    CHECK(f_star(eye(e->gt), t).value == doctest::Approx(3.0));

    SparseSymMatrix ci(e->gt);
    for (Index i = 0; i < 3; ++i) ci.set(i, i, 2.5);
    CHECK(f_star(ci, t).value ==
          doctest::Approx(3.0 - 3.0 * std::log(2.5)).epsilon(1e-14));
}

TEST_CASE("f_star matches the dense completion oracle") {
    std::mt19937 gen(71);
    for (int trial = 0; trial < 8; ++trial) {
        const auto e = testing::random_chordal(8, 0.4, gen);
        const auto t = tree_of(e);
        const SparseSymMatrix s = testing::random_dual_point(e, 0.7, gen);
        const auto fs = f_star(s, t);

        const Eigen::MatrixXd w = dense_maxdet_completion(s.dense(), *e->gt);
        const double want = static_cast<double>(e->n()) - std::log(w.determinant());
        CHECK(rel_err(fs.value, want) < 1e-8);

        // gradient: -X with X = W^{-1}
        const Eigen::MatrixXd xw = w.inverse();
        const SparseSymMatrix x = reconstruct(fs.factor);
        for (Index k = 0; k < x.nnz(); ++k) {
            const auto [i, j] = x.pattern().entry(k);
            CHECK(std::abs(x.value(k) - xw(i, j)) <
                  1e-8 * std::max(1.0, std::abs(xw(i, j))));
        }
    }
}

TEST_CASE("inverse hessian action inverts the forward action") {
    std::mt19937 gen(73);
    for (int trial = 0; trial < 8; ++trial) {
        const auto e = testing::random_chordal(9, 0.4, gen);
        const auto t = tree_of(e);
        const SparseSymMatrix s = testing::random_dual_point(e, 0.7, gen);
        const auto f = complete_factor(s, t);
        const SparseSymMatrix y = testing::random_direction(e->gt, gen);

        const auto z = hess_fstar_mvp(f, y);
        const auto back = hess_f_mvp(f, z);
        double scale = 0.0;
        for (const double v : y.values()) scale = std::max(scale, std::abs(v));
        for (Index k = 0; k < y.nnz(); ++k)
            CHECK(std::abs(back.value(k) - y.value(k)) < 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("inverse hessian action: identity completion returns the direction") {
    std::mt19937 gen(74);
    const auto e = testing::random_chordal(7, 0.4, gen);
    const auto t = tree_of(e);
    const auto f = complete_factor(eye(e->gt), t);
    const SparseSymMatrix y = testing::random_direction(e->gt, gen);
    const auto z = hess_fstar_mvp(f, y);
    for (Index k = 0; k < y.nnz(); ++k)
        CHECK(z.value(k) == doctest::Approx(y.value(k)).epsilon(1e-12));
}

TEST_CASE("inverse hessian action matches a dense assembled solve") {
    std::mt19937 gen(75);
    const auto e = testing::random_chordal(8, 0.45, gen);
    const auto t = tree_of(e);
    const SparseSymMatrix s = testing::random_dual_point(e, 0.7, gen);
    const auto f = complete_factor(s, t);
    const SparseSymMatrix x = reconstruct(f);
    const Eigen::MatrixXd xi = x.dense().inverse();

    // orthonormal pattern basis: diag E_ii, offdiag (E_ij + E_ji)/sqrt(2)
    const auto& pat = *e->gt;
    const Index nnz = pat.nnz();
    auto basis_mat = [&](Index k) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(e->n(), e->n());
        const auto [i, j] = pat.entry(k);
        if (i == j) {
            b(i, i) = 1.0;
        } else {
            b(i, j) = b(j, i) = 1.0 / std::sqrt(2.0);
        }
        return b;
    };
    Eigen::MatrixXd h(nnz, nnz);
    for (Index k = 0; k < nnz; ++k) {
        const Eigen::MatrixXd hk = xi * basis_mat(k) * xi;
        for (Index l = 0; l < nnz; ++l)
            h(l, k) = (basis_mat(l).array() * hk.array()).sum();
    }

    const SparseSymMatrix y = testing::random_direction(e->gt, gen);
    Eigen::VectorXd yv(nnz);
    for (Index k = 0; k < nnz; ++k) {
        const auto [i, j] = pat.entry(k);
        yv[k] = (i == j) ? y.value(k) : y.value(k) * std::sqrt(2.0);
    }
    const Eigen::VectorXd zv = h.ldlt().solve(yv);

    const auto z = hess_fstar_mvp(f, y);
    for (Index k = 0; k < nnz; ++k) {
        const auto [i, j] = pat.entry(k);
        const double want = (i == j) ? zv[k] : zv[k] / std::sqrt(2.0);
        CHECK(std::abs(z.value(k) - want) < 1e-8 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("dense completion oracle basics") {
    // full mask returns the input
    std::mt19937 gen(77);
    const Eigen::MatrixXd s = testing::random_spd(5, 0.8, gen);
    const auto full = SparsityPattern::full(5);
    CHECK(max_abs_diff(dense_maxdet_completion(s, full), s) == 0.0);

    // optimality: inverse vanishes off the mask
    const auto e = testing::random_chordal(9, 0.35, gen);
    const SparseSymMatrix sp = testing::random_dual_point(e, 0.8, gen);
    const Eigen::MatrixXd w = dense_maxdet_completion(sp.dense(), *e->gt);
    const Eigen::MatrixXd k = w.inverse();
    const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    for (Index j = 0; j < 9; ++j)
        for (Index i = j + 1; i < 9; ++i)
            if (!e->gt->contains(i, j)) CHECK(std::abs(k(i, j)) < 1e-10 * scale);
}

TEST_CASE("dense completion oracle handles indefinite starts via homotopy") {
    // strong path correlations: the zero-filled start is indefinite but a
    // completion exists
    const auto g = path3();
    Eigen::MatrixXd s(3, 3);
    s << 1.0, 0.9, 0.0,
         0.9, 1.0, 0.9,
         0.0, 0.9, 1.0;
    CHECK(Eigen::LLT<Eigen::MatrixXd>(s).info() != Eigen::Success);  // start not PD
    const Eigen::MatrixXd w = dense_maxdet_completion(s, g);
    CHECK(w(0, 2) == doctest::Approx(0.81).epsilon(1e-10));  // 0.9 * 0.9 / 1.0
    CHECK(Eigen::LLT<Eigen::MatrixXd>(w).info() == Eigen::Success);
}

TEST_CASE("dense completion oracle rejects impossible instances") {
    const auto g = path3();
    Eigen::MatrixXd s(3, 3);
    s << 1.0, 1.5, 0.0,
         1.5, 1.0, 0.0,
         0.0, 0.0, 1.0;  // clique block indefinite, no completion exists
    CHECK_THROWS_AS(dense_maxdet_completion(s, g), NotCompletable);
}

TEST_CASE("f_star derivative checks") {
    std::mt19937 gen(79);
    const auto e = testing::random_chordal(8, 0.4, gen);
    const auto t = tree_of(e);
    const SparseSymMatrix s = testing::random_dual_point(e, 0.6, gen);

    // convexity spot check on random pairs
    for (int trial = 0; trial < 5; ++trial) {
        const SparseSymMatrix s2 = testing::random_dual_point(e, 0.6, gen);
        SparseSymMatrix mid(e->gt);
        for (Index k = 0; k < mid.nnz(); ++k)
            mid.values()[k] = 0.5 * (s.value(k) + s2.value(k));
        const double lhs = f_star(mid, t).value;
        const double rhs = 0.5 * (f_star(s, t).value + f_star(s2, t).value);
        CHECK(lhs <= rhs + 1e-10);
    }

    // gradient vs central differences, second-order decay in t
    const SparseSymMatrix dir = testing::random_direction(e->gt, gen);
    const SparseSymMatrix x = reconstruct(complete_factor(s, t));
    const double analytic = -sym_dot(x, dir);
    auto fd = [&](double step) {
        SparseSymMatrix plus(e->gt), minus(e->gt);
        for (Index k = 0; k < s.nnz(); ++k) {
            plus.values()[k] = s.value(k) + step * dir.value(k);
            minus.values()[k] = s.value(k) - step * dir.value(k);
        }
        return (f_star(plus, t).value - f_star(minus, t).value) / (2.0 * step);
    };
    const double err3 = std::abs(fd(1e-3) - analytic);
    const double err4 = std::abs(fd(1e-4) - analytic);
    CHECK(err3 < 1e-4 * std::max(1.0, std::abs(analytic)));
    // central differences decay like t^2: roughly 100x between the levels
    if (err4 > 1e-12 * std::max(1.0, std::abs(analytic)))
        CHECK(err3 / err4 > 25.0);

    // hessian vs central differences of the gradient: grad f* = -X, so
    // -(X(s + t d) - X(s - t d)) / (2 t) must match hess_fstar(d)
    const double step = 1e-4;
    SparseSymMatrix plus(e->gt), minus(e->gt);
    for (Index k = 0; k < s.nnz(); ++k) {
        plus.values()[k] = s.value(k) + step * dir.value(k);
        minus.values()[k] = s.value(k) - step * dir.value(k);
    }
    const SparseSymMatrix xp = reconstruct(complete_factor(plus, t));
    const SparseSymMatrix xm = reconstruct(complete_factor(minus, t));
    const auto hz = hess_fstar_mvp(complete_factor(s, t), dir);
    double fro = 0.0, diff = 0.0;
    for (Index k = 0; k < s.nnz(); ++k) {
        const auto [i, j] = s.pattern().entry(k);
        const double w = (i == j) ? 1.0 : 2.0;
        const double fd_k = -(xp.value(k) - xm.value(k)) / (2.0 * step);
        diff += w * (fd_k - hz.value(k)) * (fd_k - hz.value(k));
        fro += w * hz.value(k) * hz.value(k);
    }
    CHECK(std::sqrt(diff) < 5e-6 * std::max(1.0, std::sqrt(fro)));
}
