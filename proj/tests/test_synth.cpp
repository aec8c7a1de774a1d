#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>

#include "oracles.hpp"
#include "qkp/csv_io.hpp"
#include "qkp/synth.hpp"

using namespace qkp;

TEST_CASE("edge counts") {
  CHECK(edge_count_for(10, 0.2) == 9);
  CHECK(edge_count_for(6, 0.2) == 3);
  CHECK(edge_count_for(4, 0.2) == 1);
  CHECK(edge_count_for(3, 0.2) == 1);
  CHECK(edge_count_for(5, 0.25) == 3);  // 2.5 rounds up
  CHECK(edge_count_for(7, 0.0) == 0);
  CHECK(edge_count_for(7, 1.0) == 21);
  CHECK_THROWS_AS(edge_count_for(7, 1.5), std::invalid_argument);
}

TEST_CASE("random_edge_set") {
  const EdgeSet e = random_edge_set(10, 0.2, 5);
  CHECK(e.edges.size() == 9);
  std::set<std::pair<Index, Index>> unique(e.edges.begin(), e.edges.end());
  CHECK(unique.size() == 9);
  for (auto [a, b] : e.edges) {
    CHECK(a < b);
    CHECK(b < 10);
  }
  CHECK(random_edge_set(6, 0.2, 1).edges.size() == 3);
  CHECK(random_edge_set(6, 0.0, 1).edges.empty());
  CHECK(random_edge_set(10, 0.2, 5).edges == e.edges);
}

TEST_CASE("random_edge_set is close to uniform over pairs") {
  std::map<std::pair<Index, Index>, int> hits;
  const int reps = 6000;
  for (int s = 0; s < reps; ++s)
    for (const auto& p : random_edge_set(5, 0.3, 1000 + s).edges) ++hits[p];
  // 3 of 10 pairs per draw: expected 1800 hits per pair.
  CHECK(hits.size() == 10);
  for (const auto& [p, n] : hits) CHECK(std::abs(n - 1800) < 150);
}

TEST_CASE("kron_support") {
  SUBCASE("empty graphs give the identity") {
    const SupportMatrix e = kron_support(EdgeSet{3, {}}, EdgeSet{4, {}}, {3, 4});
    CHECK(e.matrix() == Matrix::Identity(12, 12));
  }
  SUBCASE("complete graphs give all ones") {
    const EdgeSet k3{3, {{0, 1}, {0, 2}, {1, 2}}};
    const EdgeSet k2{2, {{0, 1}}};
    CHECK(kron_support(k3, k2, {3, 2}).matrix() == Matrix::Ones(6, 6));
  }
  SUBCASE("block coordinates factor exactly") {
    const EdgeSet o1{3, {{0, 2}}};
    const EdgeSet o2{4, {{0, 1}, {2, 3}}};
    const KroneckerShape sh(3, 4);
    const SupportMatrix e = kron_support(o1, o2, sh);
    const Matrix e1 = o1.indicator(), e2 = o2.indicator();
    for (Index j = 1; j <= 3; ++j)
      for (Index k = 1; k <= 3; ++k)
        for (Index i = 1; i <= 4; ++i)
          for (Index l = 1; l <= 4; ++l) {
            const auto [r, c] = block_index(sh, j, k, i, l);
            CHECK(e.matrix()(r - 1, c - 1) == e1(j - 1, k - 1) * e2(i - 1, l - 1));
          }
    // Diagonal blocks repeat the module pattern; so does block (1,3).
    CHECK(e.matrix().block(0, 0, 4, 4) == e2);
    CHECK(e.matrix().block(0, 8, 4, 4) == e2);
    CHECK(e.matrix().block(0, 4, 4, 4) == Matrix::Zero(4, 4));
    // Diagonal blocks carry 2 edges each, block pair (1,3) carries 4 + 2 * 2.
    CHECK(e.edge_count() == 3 * 2 + 8);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(kron_support(EdgeSet{2, {}}, EdgeSet{4, {}}, {3, 4}), std::invalid_argument);
  }
}

TEST_CASE("SupportMatrix validation") {
  Matrix e = Matrix::Identity(3, 3);
  e(0, 1) = 1.0;
  CHECK_THROWS_AS(SupportMatrix{e}, std::invalid_argument);
  e(1, 0) = 1.0;
  CHECK(SupportMatrix(e).edge_count() == 1);
  Matrix d = Matrix::Identity(2, 2);
  d(1, 1) = 0.0;
  CHECK_THROWS_AS(SupportMatrix{d}, std::invalid_argument);
  Matrix half = Matrix::Identity(2, 2);
  half(0, 1) = half(1, 0) = 0.5;
  CHECK_THROWS_AS(SupportMatrix{half}, std::invalid_argument);
}

TEST_CASE("random_qkp_precision") {
  SUBCASE("identity support gives a positive diagonal") {
    const SymMatrix s = random_qkp_precision(SupportMatrix(Matrix::Identity(5, 5)), 3);
    CHECK(s.matrix().isDiagonal());
    CHECK((s.matrix().diagonal().array() > 0.0).all());
  }
  SUBCASE("support, magnitudes and minimum eigenvalue") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const KroneckerShape sh(3, 4);
      const SupportMatrix e =
          kron_support(random_edge_set(3, 0.5, seed), random_edge_set(4, 0.5, seed + 100), sh);
      const SymMatrix s = random_qkp_precision(e, seed);
      for (Index r = 0; r < 12; ++r)
        for (Index c = 0; c < 12; ++c) {
          CHECK((s(r, c) != 0.0) == e(r, c));
          if (r != c && e(r, c)) {
            CHECK(std::abs(s(r, c)) >= 0.3);
            CHECK(std::abs(s(r, c)) <= 0.8);
          }
        }
      Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix());
      CHECK(eig.eigenvalues().minCoeff() >= 0.1 - 1e-12);
    }
  }
  SUBCASE("bad options") {
    PrecisionOptions bad;
    bad.low = 0.9;
    CHECK_THROWS_AS(random_qkp_precision(SupportMatrix(Matrix::Identity(2, 2)), 1, bad),
                    std::invalid_argument);
  }
}

TEST_CASE("values are not a Kronecker product") {
  // Rearranged so that a Kronecker product becomes a rank-one matrix; the
  // generated values keep a clearly nonzero second singular value.
  const Trial t = generate_trial({3, 4}, 0.5, 10, 21);
  Matrix r(9, 16);
  for (Index j = 0; j < 3; ++j)
    for (Index k = 0; k < 3; ++k)
      for (Index i = 0; i < 4; ++i)
        for (Index l = 0; l < 4; ++l) r(k * 3 + j, l * 4 + i) = t.model.s_true(j * 4 + i, k * 4 + l);
  Eigen::JacobiSVD<Matrix> svd(r);
  CHECK(svd.singularValues()(1) > 1e-2 * svd.singularValues()(0));
}

TEST_CASE("generate_trial") {
  const KroneckerShape paper(6, 10);
  const Trial t = generate_trial(paper, 0.2, 1000, 42);
  CHECK(t.model.omega1.edges.size() == 3);
  CHECK(t.model.omega2.edges.size() == 9);
  CHECK(t.data.n_samples() == 1000);
  CHECK(t.data.dim() == 60);
  CHECK(t.model.support == kron_support(t.model.omega1, t.model.omega2, paper));
  CHECK(cholesky_logdet(t.sigma).has_value());

  const Trial again = generate_trial(paper, 0.2, 1000, 42);
  CHECK(again.model.s_true == t.model.s_true);
  CHECK(again.data.samples() == t.data.samples());
  CHECK(again.sigma == t.sigma);
  CHECK_FALSE(generate_trial(paper, 0.2, 1000, 43).model.s_true == t.model.s_true);

  const Trial desk = generate_trial({3, 4}, 0.2, 500, 1);
  CHECK(desk.data.n_samples() == 500);
}

TEST_CASE("write_trial layout") {
  const auto dir = std::filesystem::temp_directory_path() / "qkp_test_write_trial";
  std::filesystem::remove_all(dir);
  const Trial t = generate_trial({2, 3}, 0.5, 20, 8);
  write_trial(t, dir);
  for (const char* f : {"S_true.csv", "E.csv", "omega1.edges", "omega2.edges", "data.csv",
                        "sigma.csv", "meta.txt"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(read_matrix_csv(dir / "S_true.csv") == t.model.s_true.matrix());
  CHECK(read_matrix_csv(dir / "data.csv") == t.data.samples());
  CHECK(read_text_file(dir / "omega2.edges") == edges_to_text(t.model.omega2));
  const std::string meta = read_text_file(dir / "meta.txt");
  CHECK(meta.find("m1=2") != std::string::npos);
  CHECK(meta.find("seed=8") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("edges_to_text is 1-based") {
  CHECK(edges_to_text(EdgeSet{3, {{0, 2}, {1, 2}}}) == "1 3\n2 3\n");
}
