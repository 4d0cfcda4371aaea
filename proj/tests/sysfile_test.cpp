#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "ddnoether/checks.hpp"
#include "ddnoether/sysfile.hpp"

using namespace ddn;
namespace fs = std::filesystem;

namespace {

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<fs::path> corpus_files() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(DDN_CORPUS_DIR))
    if (e.path().extension() == ".dde") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("ddnoether_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(SystemFile, CorpusRoundTrips) {
  auto files = corpus_files();
  ASSERT_GE(files.size(), 10u);
  for (const auto& p : files) {
    SystemFile a = load_system_file(p.string());
    std::string text = render_system_file(a);
    SystemFile b = parse_system_file(text);
    EXPECT_EQ(render_system_file(b), text) << p;
    EXPECT_EQ(b.system.equations, a.system.equations) << p;
    EXPECT_EQ(b.checks.size(), a.checks.size()) << p;
  }
}

TEST(SystemFile, ParseErrorCarriesByteOffset) {
  std::string text = "ddnoether/1\ncontinuous t\ndiscrete n\ndependent u\nequation F: u[1;0] - w\n";
  try {
    parse_system_file(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), text.find('w'));
  }
}

TEST(SystemFile, HeaderIsRequired) {
  EXPECT_THROW(parse_system_file("continuous t\ndependent u\n"), ParseError);
}

TEST(SystemFile, DeclarationsPrecedeDirectives) {
  EXPECT_THROW(parse_system_file("ddnoether/1\ncontinuous t\ndependent u\nequation F: u[1]\ndiscrete n\n"),
               ParseError);
}

TEST(SystemFile, InlineSubstitution) {
  SystemFile f = load_system_file(std::string(DDN_CORPUS_DIR) + "/volterra.dde");
  EXPECT_EQ(parse_substitution("v = -u", f.ctx).f, f.sub("S1").f);
  EXPECT_THROW(parse_substitution("v = -w", f.ctx), ParseError);
}

TEST(Corpus, AllFixturesPass) {
  for (const auto& r : run_corpus(DDN_CORPUS_DIR)) {
    EXPECT_TRUE(r.error.empty()) << r.fixture << ": " << r.error;
    for (const auto& o : r.outcomes) EXPECT_TRUE(o.pass) << r.fixture << ": " << o.text << " -- " << o.detail;
  }
}

TEST(Corpus, ReportsAreDeterministic) {
  auto render_all = [] {
    std::string s;
    for (const auto& r : run_corpus(DDN_CORPUS_DIR))
      for (const auto& o : r.outcomes) s += r.fixture + o.text + o.detail + (o.pass ? "1" : "0") + "\n";
    return s;
  };
  EXPECT_EQ(render_all(), render_all());
}

TEST(Corpus, CorruptedFixtureFailsExactlyOneRow) {
  fs::path dir = scratch_dir("corrupt");
  for (const auto& p : corpus_files()) fs::copy_file(p, dir / p.filename());
  std::string text = read(dir / "kdv.dde");
  const std::string good = "cl mass: P1 = u, u^2/2 + u[0,2]";
  auto at = text.find(good);
  ASSERT_NE(at, std::string::npos);
  text.replace(at, good.size(), "cl mass: P1 = u, u^2 + u[0,2]");
  std::ofstream(dir / "kdv.dde") << text;

  std::vector<std::string> failing;
  for (const auto& r : run_corpus(dir.string())) {
    ASSERT_TRUE(r.error.empty()) << r.fixture;
    for (const auto& o : r.outcomes)
      if (!o.pass) failing.push_back(r.fixture + ": " + o.text + " -- " + o.detail);
  }
  ASSERT_EQ(failing.size(), 1u);
  EXPECT_NE(failing[0].find("kdv.dde: cl mass identity"), std::string::npos) << failing[0];
  EXPECT_NE(failing[0].find("residue u*u[0,1]"), std::string::npos) << failing[0];
  fs::remove_all(dir);
}

TEST(Corpus, EmptyDirectoryHasNoReports) {
  fs::path dir = scratch_dir("empty");
  EXPECT_TRUE(run_corpus(dir.string()).empty());
  fs::remove_all(dir);
}

TEST(Corpus, LoadErrorsAreReportedPerFixture) {
  fs::path dir = scratch_dir("broken");
  std::ofstream(dir / "bad.dde") << "not a system file\n";
  auto reports = run_corpus(dir.string());
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_FALSE(reports[0].pass());
  EXPECT_FALSE(reports[0].error.empty());
  fs::remove_all(dir);
}

}  // namespace
