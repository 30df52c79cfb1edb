#include "kgtrace/dataset.hpp"
#include "kgtrace/error.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace kgt;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::path(KGTRACE_TEST_TMP) / "datasets";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

std::string expect_data_error(const std::filesystem::path& content,
                              const std::filesystem::path& cites) {
  try {
    load_citation_dataset(content, cites, "t");
  } catch (const DataError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected DataError";
  return {};
}

}  // namespace

TEST(Citation, TwoPapersOneCitation) {
  const auto content = write_file("two.content", "p1\t1\t0\t1\tTheory\np2\t0\t1\t1\tNeural_Networks\n");
  const auto cites = write_file("two.cites", "p1\tp2\n");
  const auto d = load_citation_dataset(content, cites, "two");
  EXPECT_EQ(d.graph.node_count(), 2u);
  EXPECT_EQ(d.graph.edge_count(), 1u);
  EXPECT_EQ(d.features, (DenseMatrix{{1, 0, 1}, {0, 1, 1}}));
  EXPECT_EQ(d.class_count(), 2u);
  // Class ids follow sorted class names.
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(d.label_name(0), "Theory");
  EXPECT_EQ(d.dropped_citations, 0u);
  EXPECT_EQ(d.descriptor["kind"], "linqs");
  EXPECT_EQ(*d.symbols.find("p2"), 1u);
}

TEST(Citation, UnknownAndSelfCitationsAreDropped) {
  const auto content = write_file("drop.content", "a\t1\tX\nb\t0\tY\n");
  const auto cites = write_file("drop.cites", "a\tb\nb\tghost\na\ta\nb\ta\n");
  const auto d = load_citation_dataset(content, cites, "drop");
  EXPECT_EQ(d.graph.edge_count(), 1u);
  EXPECT_EQ(d.dropped_citations, 2u);
}

TEST(Citation, MalformedLineReportsLocation) {
  const auto content = write_file("bad.content", "a\t1\t0\tX\nb\t1\tY\n");
  const auto cites = write_file("bad.cites", "");
  const std::string msg = expect_data_error(content, cites);
  EXPECT_NE(msg.find("bad.content:2"), std::string::npos) << msg;

  const auto non_binary = write_file("nb.content", "a\t1\t0.5\tX\n");
  EXPECT_NE(expect_data_error(non_binary, cites).find("nb.content:1"), std::string::npos);

  const auto dup = write_file("dup.content", "a\t1\tX\na\t0\tX\n");
  EXPECT_NE(expect_data_error(dup, cites).find("duplicate"), std::string::npos);

  const auto good = write_file("good.content", "a\t1\tX\nb\t0\tY\n");
  const auto bad_cites = write_file("bad2.cites", "a b\n");
  EXPECT_NE(expect_data_error(good, bad_cites).find("bad2.cites:1"), std::string::npos);
}

TEST(Citation, EmptyOrMissingFiles) {
  const auto empty = write_file("empty.content", "");
  const auto cites = write_file("empty.cites", "");
  EXPECT_NE(expect_data_error(empty, cites).find("no nodes"), std::string::npos);
  EXPECT_NE(expect_data_error(empty.string() + ".nope", cites).find(".nope"), std::string::npos);
}

TEST(Descriptor, KgDefaultsToBundledSchema) {
  const auto d = load_dataset({{"kind", "kg"}});
  EXPECT_EQ(d.name, "wireless-kg");
  EXPECT_EQ(d.graph.node_count(), 247u);
  EXPECT_EQ(d.features, DenseMatrix::identity(247));
  EXPECT_EQ(d.class_count(), 4u);
  EXPECT_EQ(d.labels.size(), 247u);

  const auto again = load_dataset(d.descriptor);
  EXPECT_EQ(again.graph.adjacency(), d.graph.adjacency());
  EXPECT_EQ(again.labels, d.labels);
}

TEST(Descriptor, LinqsRoundTrip) {
  const auto content = write_file("rt.content", "x\t1\t1\tA\ny\t0\t1\tB\nz\t1\t0\tA\n");
  const auto cites = write_file("rt.cites", "x\ty\ny\tz\n");
  const auto d = load_dataset({{"kind", "linqs"},
                               {"content", content.string()},
                               {"cites", cites.string()},
                               {"name", "rt"}});
  EXPECT_EQ(d.name, "rt");
  const auto again = load_dataset(d.descriptor);
  EXPECT_EQ(again.graph.adjacency(), d.graph.adjacency());
  EXPECT_EQ(again.features, d.features);
}

TEST(Descriptor, Errors) {
  EXPECT_THROW(load_dataset(nlohmann::json::object()), DataError);
  EXPECT_THROW(load_dataset({{"kind", "pubmed"}}), DataError);
  EXPECT_THROW(load_dataset({{"kind", "linqs"}, {"content", "a"}}), DataError);
}
