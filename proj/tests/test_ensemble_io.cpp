#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "sapsim/ensemble_io.hpp"

namespace sapsim {
namespace {

PathEnsemble sample_ensemble() {
    PathEnsemble ens(TimeGrid{0.25, 5}, 3, 2, 0);
    double v = 0.125;
    for (double& x : ens.raw()) x = (v *= -1.1);
    return ens;
}

TEST(EnsembleIo, StreamRoundTrip) {
    const PathEnsemble ens = sample_ensemble();
    std::stringstream buf;
    write_ensemble(buf, ens);
    EXPECT_EQ(buf.str().size(), 8 + 4 + 4 + 8 + 8 + 8 + ens.raw().size() * 8);
    const PathEnsemble back = read_ensemble(buf);
    EXPECT_EQ(back.grid(), ens.grid());
    EXPECT_EQ(back.paths(), 3u);
    EXPECT_EQ(back.dim(), 2u);
    EXPECT_TRUE(std::equal(back.raw().begin(), back.raw().end(), ens.raw().begin()));
    EXPECT_EQ(back.invalid_count(), 0u);
}

TEST(EnsembleIo, HeaderLayout) {
    std::stringstream buf;
    write_ensemble(buf, sample_ensemble());
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 8), "SAPSIMEN");
    std::uint32_t version = 0, dim = 0;
    std::uint64_t paths = 0, points = 0;
    double dt = 0;
    std::memcpy(&version, bytes.data() + 8, 4);
    std::memcpy(&dim, bytes.data() + 12, 4);
    std::memcpy(&paths, bytes.data() + 16, 8);
    std::memcpy(&points, bytes.data() + 24, 8);
    std::memcpy(&dt, bytes.data() + 32, 8);
    EXPECT_EQ(version, kEnsembleFormatVersion);
    EXPECT_EQ(dim, 2u);
    EXPECT_EQ(paths, 3u);
    EXPECT_EQ(points, 5u);
    EXPECT_EQ(dt, 0.25);
}

TEST(EnsembleIo, NonFinitePathsComeBackInvalid) {
    PathEnsemble ens = sample_ensemble();
    ens.state(1, 3)[0] = std::numeric_limits<double>::quiet_NaN();
    std::stringstream buf;
    write_ensemble(buf, ens);
    const PathEnsemble back = read_ensemble(buf);
    EXPECT_TRUE(back.valid(0));
    EXPECT_FALSE(back.valid(1));
    EXPECT_TRUE(back.valid(2));
}

TEST(EnsembleIo, RejectsCorruptInput) {
    std::stringstream buf;
    write_ensemble(buf, sample_ensemble());
    const std::string good = buf.str();

    std::stringstream bad_magic("NOTMAGIC" + good.substr(8));
    EXPECT_THROW(read_ensemble(bad_magic), InvalidInput);

    std::string wrong_version = good;
    wrong_version[8] = 9;
    std::stringstream bad_version(wrong_version);
    EXPECT_THROW(read_ensemble(bad_version), InvalidInput);

    std::stringstream truncated(good.substr(0, good.size() - 3));
    EXPECT_THROW(read_ensemble(truncated), InvalidInput);

    std::stringstream header_only(good.substr(0, 20));
    EXPECT_THROW(read_ensemble(header_only), InvalidInput);
}

TEST(EnsembleIo, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "sapsim_io_test";
    std::filesystem::create_directories(dir);
    const auto file = dir / "ens.bin";
    const PathEnsemble ens = sample_ensemble();
    write_ensemble(file, ens);
    const PathEnsemble back = read_ensemble(file);
    EXPECT_TRUE(std::equal(back.raw().begin(), back.raw().end(), ens.raw().begin()));
    std::filesystem::remove_all(dir);
    EXPECT_THROW(read_ensemble(dir / "missing.bin"), InvalidInput);
    EXPECT_THROW(write_ensemble(dir / "no" / "such" / "dir.bin", ens), InvalidInput);
}

}  // namespace
}  // namespace sapsim
