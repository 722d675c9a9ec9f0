#include <filesystem>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "specperturb/io.hpp"

using namespace specperturb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "specperturb_io_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, MatrixRoundTripIsExact) {
  SeededRng rng(1);
  const Matrix m = gaussian_matrix(7, 5, rng) * 1e3;
  const fs::path p = scratch("m.csv");
  io::write_matrix(p, m);
  EXPECT_EQ(io::read_matrix(p), m);
}

TEST(Io, SeventeenDigits) {
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(1.0), "1");
  EXPECT_EQ(io::matrix_to_csv(Matrix::Identity(2, 2)), "1,0\n0,1\n");
}

TEST(Io, LabelsAndPartialRoundTrip) {
  const fs::path lp = scratch("l.csv");
  io::write_labels(lp, {0, 2, 1, 1});
  EXPECT_EQ(io::read_labels(lp), (std::vector<int>{0, 2, 1, 1}));
  const PartialMatrix pm{ObservationMask{3, 4, {{0, 1}, {2, 3}}}, {1.5, -2.0}};
  const fs::path pp = scratch("p.csv");
  io::write_partial(pp, pm);
  const PartialMatrix back = io::read_partial(pp, 3, 4);
  EXPECT_EQ(back.mask.entries, pm.mask.entries);
  EXPECT_EQ(back.values, pm.values);
  const PartialMatrix inferred = io::read_partial(pp);
  EXPECT_EQ(inferred.mask.rows, 3);
  EXPECT_EQ(inferred.mask.cols, 4);
}

TEST(Io, BlankLinesAndCrlfTolerated) {
  const fs::path p = scratch("crlf.csv");
  write_text(p, "1, 2\r\n\r\n3,4\r\n");
  Matrix expect(2, 2);
  expect << 1, 2, 3, 4;
  EXPECT_EQ(io::read_matrix(p), expect);
}

TEST(Io, DiagnosticsCarryLineNumbers) {
  const fs::path ragged = scratch("ragged.csv");
  write_text(ragged, "1,2\n3\n");
  EXPECT_NE(message_of([&] { io::read_matrix(ragged); }).find(":2:"), std::string::npos);
  const fs::path bad = scratch("bad.csv");
  write_text(bad, "1,2\n3,x\n");
  EXPECT_NE(message_of([&] { io::read_matrix(bad); }).find(":2:"), std::string::npos);
  const fs::path dup = scratch("dup.csv");
  write_text(dup, "0,0,1\n0,0,2\n");
  EXPECT_NE(message_of([&] { io::read_partial(dup); }).find("duplicate"), std::string::npos);
  const fs::path lab = scratch("lab.csv");
  write_text(lab, "0\n-1\n");
  EXPECT_NE(message_of([&] { io::read_labels(lab); }).find(":2:"), std::string::npos);
  EXPECT_THROW(io::read_matrix(scratch("missing.csv")), InvalidArgument);
  const fs::path pp = scratch("shape.csv");
  write_text(pp, "0,5,1\n");
  EXPECT_THROW(io::read_partial(pp, 2, 2), InvalidArgument);
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  fs::remove_all(dir);
  io::write_atomic(dir / "a.txt", "hello");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1);
}
