#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "convograph/corpus.hpp"
#include "convograph/errors.hpp"

using namespace convograph;

namespace {

const std::string kTwoConversations =
    R"({"id": "c1", "turns": [{"speaker": "customer", "text": "hi there"}, {"speaker": "agent", "text": "hello"}, {"speaker": "customer", "text": "i need help"}]})"
    "\n"
    R"({"id": "c2", "turns": [{"speaker": "customer", "text": "where is my order"}, {"speaker": "agent", "text": "let me check"}]})"
    "\n";

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("load_corpus counts utterances across conversations") {
  const auto path = write_temp("convograph_corpus_basic.jsonl", kTwoConversations);
  const Corpus corpus = load_corpus(path);
  CHECK(corpus.conversations.size() == 2);
  CHECK(corpus.total_utterances == 5);
  CHECK(corpus.conversations[0].id == "c1");
  CHECK(corpus.conversations[0].utterances[2].text == "i need help");
  CHECK(corpus.conversations[0].utterances[2].turn_index == 2);
}

TEST_CASE("speaker filter drops turns and re-densifies indices") {
  const auto path = write_temp("convograph_corpus_filter.jsonl", kTwoConversations);
  const Corpus corpus = load_corpus(path, std::set<Speaker>{Speaker::customer});
  CHECK(corpus.total_utterances == 3);
  for (const auto& conv : corpus.conversations)
    for (std::size_t t = 0; t < conv.utterances.size(); ++t) {
      CHECK(conv.utterances[t].speaker == Speaker::customer);
      CHECK(conv.utterances[t].turn_index == static_cast<int>(t));
    }
}

TEST_CASE("malformed lines are reported with their line number") {
  const std::string bad =
      R"({"id": "ok", "turns": [{"speaker": "agent", "text": "fine"}]})"
      "\n"
      R"({"id": "broken", "turns": [{"speaker": "agent"}]})"
      "\n";
  CHECK_THROWS_WITH_AS(parse_corpus_jsonl(bad),
                       doctest::Contains("line 2"), IoError);

  CHECK_THROWS_WITH_AS(parse_corpus_jsonl("not json\n"),
                       doctest::Contains("line 1"), IoError);
}

TEST_CASE("empty or fully-filtered corpora are rejected") {
  CHECK_THROWS_AS(parse_corpus_jsonl("\n\n"), IoError);
  const std::string agent_only =
      R"({"id": "c", "turns": [{"speaker": "agent", "text": "hello"}]})" "\n";
  CHECK_THROWS_AS(
      parse_corpus_jsonl(agent_only, std::set<Speaker>{Speaker::customer}),
      IoError);
}

TEST_CASE("missing corpus file is an IO error") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/convograph.jsonl"), IoError);
}

TEST_CASE("whitespace-only text is rejected, surrounding space trimmed") {
  const std::string blank_text =
      R"({"id": "c", "turns": [{"speaker": "agent", "text": "   "}]})" "\n";
  CHECK_THROWS_AS(parse_corpus_jsonl(blank_text), IoError);

  const std::string padded =
      R"({"id": "c", "turns": [{"speaker": "agent", "text": "  hi  "}]})" "\n";
  CHECK(parse_corpus_jsonl(padded).conversations[0].utterances[0].text == "hi");
}

TEST_CASE("utterance_sequences preserves order and covers every utterance") {
  const Corpus corpus = parse_corpus_jsonl(kTwoConversations);
  const auto seqs = utterance_sequences(corpus);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].first == "c1");
  CHECK(seqs[1].first == "c2");
  CHECK(seqs[0].second.size() == 3);
  CHECK(seqs[0].second[0].text == "hi there");

  std::size_t total = 0;
  for (const auto& [id, seq] : seqs) total += seq.size();
  CHECK(total == corpus.total_utterances);

  const Corpus empty;  // constructed directly, not via load
  CHECK(utterance_sequences(empty).empty());
}

TEST_CASE("loading identical bytes twice gives identical corpora") {
  const Corpus a = parse_corpus_jsonl(kTwoConversations);
  const Corpus b = parse_corpus_jsonl(kTwoConversations);
  REQUIRE(a.conversations.size() == b.conversations.size());
  CHECK(a.total_utterances == b.total_utterances);
  CHECK(flatten_texts(a) == flatten_texts(b));
}
