#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "temp_dir.hpp"

namespace tradediff {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    if (code != 0) ADD_FAILURE() << err.str();
    return code;
}

const fs::path kGolden = TRADEDIFF_GOLDEN_DIR;
const std::string kToy = (testing::data_dir() / "toy").string();

TEST(Golden, ToyRealIncomePath) {
    testing::TempDir dir("golden_path");
    ASSERT_EQ(run({"simulate", "--flows", kToy, "--horizon", "20", "--out", dir.str()}), 0);
    ASSERT_EQ(run({"report", "--path", dir.str("path.csv"), "--var", "real_income", "--digits", "10", "--out",
                   dir.str("real_income.csv")}),
              0);
    EXPECT_EQ(slurp(dir.path() / "real_income.csv"), slurp(kGolden / "toy_real_income_h20.csv"));
}

TEST(Golden, ToyFullDecoupleWelfareTable) {
    for (const char* threads : {"1", "4"}) {
        testing::TempDir dir(std::string("golden_welfare_") + threads);
        ASSERT_EQ(run({"--threads", threads, "scenario", "run", "--flows", kToy, "--preset", "full_decouple", "--out",
                       dir.str("rep")}),
                  0);
        ASSERT_EQ(run({"report", "--report", dir.str("rep"), "--table", "welfare", "--digits", "10", "--out",
                       dir.str("welfare.csv")}),
                  0);
        EXPECT_EQ(slurp(dir.path() / "welfare.csv"), slurp(kGolden / "toy_full_decouple_welfare.csv"))
            << "threads " << threads;
    }
}

}  // namespace
}  // namespace tradediff
