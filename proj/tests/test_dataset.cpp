#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "smcsr/dataset.hpp"
#include "smcsr/rng.hpp"

using namespace smcsr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("smcsr-test-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Dataset random_dataset(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(rows, cols);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-5.0, 5.0);
  for (int i = 0; i < rows; ++i) y[i] = rng.normal(0.0, 2.0);
  return make_dataset(std::move(X), std::move(y));
}

}  // namespace

TEST_CASE("make_dataset defaults everything to the training split") {
  Dataset d = random_dataset(10, 2, 1);
  CHECK(d.train.size() == 10);
  CHECK(d.test.empty());
  CHECK(d.validation.empty());
  CHECK(d.magnitude == doctest::Approx(median_abs(d.y)));
}

TEST_CASE("make_dataset rejects non-finite entries") {
  Eigen::MatrixXd X(2, 1);
  X << 1.0, 2.0;
  Eigen::VectorXd y(2);
  y << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(make_dataset(X, y), data_error);
}

TEST_CASE("median_abs hand values") {
  Eigen::VectorXd v(4);
  v << -1.0, 3.0, -2.0, 10.0;
  CHECK(median_abs(v) == doctest::Approx(2.5));
  Eigen::VectorXd w(3);
  w << -4.0, 0.0, 1.0;
  CHECK(median_abs(w) == doctest::Approx(1.0));
}

TEST_CASE("CSV round trip preserves values and the header contract") {
  TempDir tmp;
  Dataset d = random_dataset(23, 3, 2);
  std::string path = (tmp.path / "d.csv").string();
  save_csv(d, path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0,x1,x2,y");

  Dataset back = load_csv(path);
  REQUIRE(back.n_rows() == d.n_rows());
  REQUIRE(back.n_features() == 3);
  CHECK((back.X - d.X).cwiseAbs().maxCoeff() == 0.0);  // 17 digits round trips exactly
  CHECK((back.y - d.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("load_csv rejects malformed files") {
  TempDir tmp;
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.path / name);
    out << text;
    return (tmp.path / name).string();
  };
  CHECK_THROWS_AS(load_csv(write("bad1.csv", "a,b\n1,2\n")), data_error);
  CHECK_THROWS_AS(load_csv(write("bad2.csv", "x0,y\n1\n")), data_error);
  CHECK_THROWS_AS(load_csv(write("bad3.csv", "x0,y\n1,zzz\n")), data_error);
  CHECK_THROWS_AS(load_csv((tmp.path / "missing.csv").string()), data_error);
}

TEST_CASE("split manifest round trips and validates") {
  TempDir tmp;
  Dataset d = random_dataset(10, 1, 3);
  d.train = {0, 1, 2, 3};
  d.validation = {4, 5};
  d.test = {6, 7, 8, 9};
  std::string path = (tmp.path / "split.json").string();
  save_split_manifest(d, path);

  Dataset fresh = random_dataset(10, 1, 3);
  load_split_manifest(fresh, path);
  CHECK(fresh.train == d.train);
  CHECK(fresh.validation == d.validation);
  CHECK(fresh.test == d.test);

  // overlapping splits rejected
  {
    std::ofstream out(tmp.path / "overlap.json");
    out << R"({"train":[0,1],"validation":[1],"test":[]})";
  }
  CHECK_THROWS_AS(load_split_manifest(fresh, (tmp.path / "overlap.json").string()), data_error);
  // empty train rejected
  {
    std::ofstream out(tmp.path / "empty.json");
    out << R"({"train":[],"validation":[],"test":[0]})";
  }
  CHECK_THROWS_AS(load_split_manifest(fresh, (tmp.path / "empty.json").string()), data_error);
  // out-of-range index rejected
  {
    std::ofstream out(tmp.path / "oob.json");
    out << R"({"train":[0,99],"validation":[],"test":[]})";
  }
  CHECK_THROWS_AS(load_split_manifest(fresh, (tmp.path / "oob.json").string()), data_error);
}

TEST_CASE("fingerprint reacts to data and split changes") {
  Dataset a = random_dataset(12, 2, 4);
  Dataset b = a;
  CHECK(fingerprint(a) == fingerprint(b));
  b.y[3] += 1e-9;
  CHECK(fingerprint(a) != fingerprint(b));
  Dataset c = a;
  c.test.push_back(c.train.back());
  c.train.pop_back();
  CHECK(fingerprint(a) != fingerprint(c));
}

TEST_CASE("split row gathers select the right rows") {
  Dataset d = random_dataset(6, 2, 5);
  d.train = {0, 2};
  d.test = {5};
  Eigen::MatrixXd xt = d.x_rows(Split::Train);
  REQUIRE(xt.rows() == 2);
  CHECK(xt(1, 0) == d.X(2, 0));
  CHECK(d.y_rows(Split::Test)(0) == d.y(5));
  CHECK(d.x_rows(Split::All).rows() == 6);
}
