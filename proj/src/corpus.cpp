#include "convograph/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "convograph/errors.hpp"

namespace convograph {

const char* to_string(Speaker s) {
  switch (s) {
    case Speaker::customer:
      return "customer";
    case Speaker::agent:
      return "agent";
    case Speaker::other:
      return "other";
  }
  return "other";
}

std::optional<Speaker> speaker_from_string(std::string_view s) {
  if (s == "customer") return Speaker::customer;
  if (s == "agent") return Speaker::agent;
  if (s == "other") return Speaker::other;
  return std::nullopt;
}

std::string trim_whitespace(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

namespace {

Conversation parse_conversation(const nlohmann::json& j, std::size_t line_no,
                                const SpeakerFilter& filter) {
  auto line_err = [&](const std::string& msg) {
    return IoError("line " + std::to_string(line_no) + ": " + msg);
  };
  if (!j.is_object()) throw line_err("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string())
    throw line_err("missing string field \"id\"");
  if (!j.contains("turns") || !j["turns"].is_array())
    throw line_err("missing array field \"turns\"");

  Conversation conv;
  conv.id = j["id"].get<std::string>();
  const auto& turns = j["turns"];
  if (turns.empty()) throw line_err("\"turns\" is empty");

  for (std::size_t t = 0; t < turns.size(); ++t) {
    const auto& turn = turns[t];
    auto turn_err = [&](const std::string& msg) {
      return IoError("line " + std::to_string(line_no) + ", turn " +
                     std::to_string(t) + ": " + msg);
    };
    if (!turn.is_object()) throw turn_err("expected a JSON object");
    if (!turn.contains("speaker") || !turn["speaker"].is_string())
      throw turn_err("missing string field \"speaker\"");
    if (!turn.contains("text") || !turn["text"].is_string())
      throw turn_err("missing string field \"text\"");
    const auto speaker =
        speaker_from_string(turn["speaker"].get<std::string>());
    if (!speaker)
      throw turn_err("unknown speaker \"" +
                     turn["speaker"].get<std::string>() + "\"");
    std::string text = trim_whitespace(turn["text"].get<std::string>());
    if (text.empty()) throw turn_err("\"text\" is empty after trimming");
    if (filter && !filter->contains(*speaker)) continue;

    Utterance u;
    u.conversation_id = conv.id;
    u.turn_index = static_cast<int>(conv.utterances.size());
    u.speaker = *speaker;
    u.text = std::move(text);
    conv.utterances.push_back(std::move(u));
  }
  return conv;
}

}  // namespace

Corpus parse_corpus_jsonl(const std::string& jsonl,
                          const SpeakerFilter& filter) {
  Corpus corpus;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_whitespace(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    Conversation conv = parse_conversation(j, line_no, filter);
    if (conv.utterances.empty()) continue;  // fully filtered out
    corpus.total_utterances += conv.utterances.size();
    corpus.conversations.push_back(std::move(conv));
  }
  if (corpus.conversations.empty())
    throw IoError(filter ? "corpus is empty after speaker filtering"
                         : "corpus contains no conversations");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path,
                   const SpeakerFilter& filter) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus_jsonl(buf.str(), filter);
}

std::vector<std::pair<std::string, std::span<const Utterance>>>
utterance_sequences(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::span<const Utterance>>> out;
  out.reserve(corpus.conversations.size());
  for (const auto& conv : corpus.conversations)
    out.emplace_back(conv.id, std::span<const Utterance>(conv.utterances));
  return out;
}

std::vector<std::string> flatten_texts(const Corpus& corpus) {
  std::vector<std::string> texts;
  texts.reserve(corpus.total_utterances);
  for (const auto& conv : corpus.conversations)
    for (const auto& u : conv.utterances) texts.push_back(u.text);
  return texts;
}

}  // namespace convograph
