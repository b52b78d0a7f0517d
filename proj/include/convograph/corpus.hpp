#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace convograph {

enum class Speaker { customer, agent, other };

const char* to_string(Speaker s);
std::optional<Speaker> speaker_from_string(std::string_view s);

struct Utterance {
  std::string conversation_id;
  int turn_index = 0;  // 0-based, contiguous within a conversation
  Speaker speaker = Speaker::other;
  std::string text;  // whitespace-trimmed, never empty
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;  // ordered by turn_index
};

// Immutable after load; safe to share read-only across threads.
struct Corpus {
  std::vector<Conversation> conversations;
  std::size_t total_utterances = 0;
};

// Empty optional = keep all speakers.
using SpeakerFilter = std::optional<std::set<Speaker>>;

// Reads a JSONL corpus, one conversation per line:
//   {"id": "...", "turns": [{"speaker": "customer", "text": "..."}, ...]}
// turn_index is implicit from array position. Utterances not matching the
// filter are dropped and turn indices re-densified; conversations left empty
// by filtering are dropped. Malformed lines are reported by line number.
Corpus load_corpus(const std::filesystem::path& path,
                   const SpeakerFilter& filter = std::nullopt);

// Same parse applied to an in-memory JSONL string.
Corpus parse_corpus_jsonl(const std::string& jsonl,
                          const SpeakerFilter& filter = std::nullopt);

// One entry per conversation, in corpus order; spans point into the corpus.
std::vector<std::pair<std::string, std::span<const Utterance>>>
utterance_sequences(const Corpus& corpus);

// Utterance texts in flattened corpus order. This order defines the row
// order of EmbeddingMatrix and the index space used everywhere downstream.
std::vector<std::string> flatten_texts(const Corpus& corpus);

std::string trim_whitespace(const std::string& s);

}  // namespace convograph
