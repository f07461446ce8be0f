#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lifecast/context.hpp"
#include "lifecast/rng.hpp"

using namespace lifecast;

namespace {

ModelShape small_shape() {
  ModelShape s;
  s.value_dim = 1;
  s.desc_dim = 3;
  s.ref_dim = 4;
  s.static_dim = 4;
  s.hidden_dim = 5;
  s.channels = 4;
  s.blocks = 1;
  s.window = 4;
  s.embed_width = 4;
  s.static_depth = 2;
  s.fusion = Fusion::Learned;
  return s;
}

Matrix traj(std::initializer_list<double> vals) {
  Matrix m(vals.size(), 1);
  std::size_t t = 0;
  for (double v : vals) m(t++, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("select_references orders by distance with stable ties") {
  std::vector<Vec> lib{{0.0, 0.0}, {3.0, 4.0}, {1.0, 0.0}, {0.0, 1.0}};
  ReferenceSelection sel = select_references(lib, Vec{0.0, 0.0}, 3);
  REQUIRE(sel.indices.size() == 3);
  CHECK(sel.indices[0] == 0);
  // Entries 2 and 3 tie at distance 1; library order breaks the tie.
  CHECK(sel.indices[1] == 2);
  CHECK(sel.indices[2] == 3);
  CHECK(sel.distances2[0] == doctest::Approx(0.0));
  CHECK(sel.distances2[1] == doctest::Approx(1.0));

  ReferenceSelection all = select_references(lib, Vec{0.0, 0.0}, 99);
  CHECK(all.indices.size() == 4);
  CHECK(all.indices[3] == 1);

  CHECK_THROWS_AS(select_references(lib, Vec{0.0}, 2), std::invalid_argument);
}

TEST_CASE("similarity weights form a softmax over -gamma d2") {
  Vec d2{0.0, 1.0, 4.0};
  Vec w = similarity_weights(d2, 1.0);
  REQUIRE(w.size() == 3);
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[0] > w[1]);
  CHECK(w[1] > w[2]);
  const double expect0 = 1.0 / (1.0 + std::exp(-1.0) + std::exp(-4.0));
  CHECK(w[0] == doctest::Approx(expect0).epsilon(1e-12));

  Vec uniform = similarity_weights(d2, 0.0);
  for (double x : uniform) CHECK(x == doctest::Approx(1.0 / 3.0));

  // Sharper temperature concentrates on the nearest reference.
  CHECK(similarity_weights(d2, 5.0)[0] > w[0]);
  CHECK(similarity_weights({}, 1.0).empty());
  CHECK_THROWS_AS(similarity_weights(d2, -1.0), std::invalid_argument);
}

TEST_CASE("build_context is invariant to reference list order") {
  for (Fusion fusion : {Fusion::Scaled, Fusion::Learned}) {
    ModelShape shape = small_shape();
    shape.fusion = fusion;
    ModelParameters p = model_init(shape, 0.7, 91);

    ContextInput a;
    a.refs = {traj({0.1, 0.4, 0.2}), traj({0.8, 0.3}), traj({0.5, 0.5, 0.5, 0.1})};
    a.weights = Vec{0.2, 0.5, 0.3};
    a.descriptor = Vec{0.3, -0.2, 1.1};

    ContextInput b;  // same references, listed in a different order
    b.refs = {a.refs[2], a.refs[0], a.refs[1]};
    b.weights = Vec{0.3, 0.2, 0.5};
    b.descriptor = a.descriptor;

    ContextState ca = build_context(p, a);
    ContextState cb = build_context(p, b);
    REQUIRE(ca.c.size() == cb.c.size());
    for (std::size_t i = 0; i < ca.c.size(); ++i) CHECK(ca.c[i] == cb.c[i]);
    for (std::size_t i = 0; i < ca.h0.size(); ++i) CHECK(ca.h0[i] == cb.h0[i]);
  }
}

TEST_CASE("build_context output dimensions and validation") {
  ModelShape shape = small_shape();
  ModelParameters p = model_init(shape, 0.7, 92);
  ContextInput in;
  in.refs = {traj({0.1, 0.2})};
  in.weights = Vec{1.0};
  in.descriptor = Vec{0.0, 0.0, 0.0};
  ContextState cs = build_context(p, in);
  CHECK(cs.c.size() == shape.context_dim());
  CHECK(cs.h0.size() == shape.hidden_dim);

  ContextInput bad = in;
  bad.weights = Vec{0.5, 0.5};
  CHECK_THROWS_AS(build_context(p, bad), std::invalid_argument);
  bad = in;
  bad.descriptor = Vec{0.0};
  CHECK_THROWS_AS(build_context(p, bad), std::invalid_argument);
  bad = in;
  bad.refs = {Matrix(2, 3)};
  CHECK_THROWS_AS(build_context(p, bad), std::invalid_argument);
}

TEST_CASE("no references still yields a usable context") {
  ModelShape shape = small_shape();
  ModelParameters p = model_init(shape, 0.7, 93);
  ContextInput in;
  in.descriptor = Vec{1.0, 2.0, 3.0};
  ContextState cs = build_context(p, in);
  CHECK(cs.c.size() == shape.context_dim());
  // The reference half is the empty-aggregation state (zeros).
  for (std::size_t i = 0; i < shape.ref_dim; ++i) CHECK(cs.c[i] == 0.0);
}
