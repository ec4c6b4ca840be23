#include "patsnd/dsbuild.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "patsnd/io.hpp"

namespace patsnd {

using nlohmann::json;

Triple to_triple(const FactInstance& instance) {
  return {instance.e1.entity_id, instance.relation_id, instance.e2.entity_id, instance.label};
}

std::vector<Triple> extract_triples(const std::vector<FactInstance>& instances) {
  std::vector<Triple> out;
  TripleSet seen;
  for (const FactInstance& instance : instances) {
    Triple t = to_triple(instance);
    if (seen.contains(t)) continue;
    seen.insert(t);
    out.push_back(std::move(t));
  }
  return out;
}

void validate_sentence(const CorpusSentence& sentence) {
  const int n = static_cast<int>(sentence.text.size());
  std::vector<Span> spans;
  for (const Mention& m : sentence.mentions) {
    if (m.span.start < 0 || m.span.end > n || m.span.start >= m.span.end) {
      throw SpanError("mention span [" + std::to_string(m.span.start) + ", " +
                      std::to_string(m.span.end) + ") out of bounds for text of length " +
                      std::to_string(n));
    }
    spans.push_back(m.span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const Span& a, const Span& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start < spans[i - 1].end) {
      throw SpanError("overlapping mention spans in sentence");
    }
  }
}

std::vector<FactInstance> align(const std::vector<CorpusSentence>& corpus,
                                const std::vector<Triple>& kr_triples) {
  // Index: ordered pair key -> distinct relations attested for it.
  std::unordered_map<std::string, std::vector<std::string>> by_pair;
  {
    TripleSet seen;
    for (const Triple& t : kr_triples) {
      if (seen.contains(t)) continue;
      seen.insert(t);
      by_pair[t.e1 + '\x1f' + t.e2].push_back(t.relation_id);
    }
  }

  std::vector<FactInstance> out;
  for (const CorpusSentence& sentence : corpus) {
    validate_sentence(sentence);
    // First mention span per entity, in order of first appearance.
    std::vector<std::string> ids;
    std::unordered_map<std::string, Span> first_span;
    for (const Mention& m : sentence.mentions) {
      if (first_span.emplace(m.entity_id, m.span).second) ids.push_back(m.entity_id);
    }
    for (const std::string& a : ids) {
      for (const std::string& b : ids) {
        if (a == b) continue;
        auto it = by_pair.find(a + '\x1f' + b);
        if (it == by_pair.end() || it->second.size() != 1) continue;
        FactInstance instance;
        instance.text = sentence.text;
        instance.e1 = {a, first_span[a]};
        instance.e2 = {b, first_span[b]};
        instance.relation_id = it->second.front();
        instance.label = TripleLabel::kNormal;
        out.push_back(std::move(instance));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

std::string unordered_pair_key(const FactInstance& instance) {
  const std::string& a = instance.e1.entity_id;
  const std::string& b = instance.e2.entity_id;
  return a <= b ? a + '\x1f' + b : b + '\x1f' + a;
}

}  // namespace

SplitResult split(const std::vector<FactInstance>& instances, Rng& rng,
                  double test_pool_fraction) {
  if (!(test_pool_fraction > 0.0 && test_pool_fraction < 1.0)) {
    throw InvalidInputError("split: fraction must lie in (0, 1)");
  }
  SplitResult result;
  const std::size_t n = instances.size();
  if (n == 0) {
    result.achieved_fraction = 0.0;
    return result;
  }

  // Instances sharing a text or an unordered entity pair must stay together.
  UnionFind uf(n);
  std::unordered_map<std::string, std::size_t> by_text;
  std::unordered_map<std::string, std::size_t> by_pair;
  for (std::size_t i = 0; i < n; ++i) {
    if (auto [it, fresh] = by_text.emplace(instances[i].text, i); !fresh) uf.unite(i, it->second);
    if (auto [it, fresh] = by_pair.emplace(unordered_pair_key(instances[i]), i); !fresh) {
      uf.unite(i, it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> components;  // keyed by root; ordered
  for (std::size_t i = 0; i < n; ++i) components[uf.find(i)].push_back(i);

  std::vector<std::vector<std::size_t>> component_list;
  component_list.reserve(components.size());
  for (auto& [root, members] : components) component_list.push_back(std::move(members));
  // Deterministic base order is by smallest member; shuffle for the draw.
  std::sort(component_list.begin(), component_list.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  rng.shuffle(component_list);

  const std::size_t target =
      static_cast<std::size_t>(std::llround(test_pool_fraction * static_cast<double>(n)));
  std::vector<bool> in_pool(n, false);
  std::size_t pool_size = 0;
  for (const auto& component : component_list) {
    if (pool_size + component.size() <= target) {
      for (std::size_t i : component) in_pool[i] = true;
      pool_size += component.size();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_pool[i] ? result.test_pool : result.train).push_back(instances[i]);
  }
  result.achieved_fraction = static_cast<double>(pool_size) / static_cast<double>(n);
  const std::size_t deviation = pool_size > target ? pool_size - target : target - pool_size;
  if (deviation > 1) {
    std::ostringstream warn;
    warn << "split: requested fraction " << test_pool_fraction << " unattainable under "
         << "disjointness constraints; achieved " << result.achieved_fraction << " ("
         << pool_size << "/" << n << ")";
    result.warning = warn.str();
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON Lines formats

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    fn(line_no, parsed);
  }
}

EntityMention parse_entity_mention(const json& obj, const std::filesystem::path& path,
                                   std::size_t line_no) {
  if (!obj.is_object() || !obj.contains("id") || !obj.contains("start") || !obj.contains("end")) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                     ": entity mention needs id/start/end");
  }
  return {obj["id"].get<std::string>(),
          {obj["start"].get<int>(), obj["end"].get<int>()}};
}

}  // namespace

std::vector<CorpusSentence> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusSentence> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    CorpusSentence sentence;
    if (!obj.contains("text") || !obj["text"].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing \"text\"");
    }
    sentence.text = obj["text"].get<std::string>();
    for (const json& m : obj.value("mentions", json::array())) {
      EntityMention em = parse_entity_mention(m, path, line_no);
      sentence.mentions.push_back({em.entity_id, em.span});
    }
    validate_sentence(sentence);
    out.push_back(std::move(sentence));
  });
  return out;
}

std::vector<FactInstance> load_instances(const std::filesystem::path& path) {
  std::vector<FactInstance> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    FactInstance instance;
    if (!obj.contains("text") || !obj.contains("e1") || !obj.contains("e2") ||
        !obj.contains("relation")) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": instance needs text/e1/e2/relation");
    }
    instance.text = obj["text"].get<std::string>();
    instance.e1 = parse_entity_mention(obj["e1"], path, line_no);
    instance.e2 = parse_entity_mention(obj["e2"], path, line_no);
    instance.relation_id = obj["relation"].get<std::string>();
    instance.label = triple_label_from_string(obj.value("label", std::string("NORMAL")));
    if (instance.label == TripleLabel::kPseudoNovel) {
      throw LabelError(path.string() + ":" + std::to_string(line_no) +
                       ": PSEUDO_NOVEL is not a valid dataset label");
    }
    if (instance.e1.entity_id == instance.e2.entity_id) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": e1 and e2 must be distinct entities");
    }
    out.push_back(std::move(instance));
  });
  return out;
}

void save_instances(const std::filesystem::path& path,
                    const std::vector<FactInstance>& instances) {
  std::ostringstream out;
  for (const FactInstance& instance : instances) {
    json obj = {{"text", instance.text},
                {"e1",
                 {{"id", instance.e1.entity_id},
                  {"start", instance.e1.span.start},
                  {"end", instance.e1.span.end}}},
                {"e2",
                 {{"id", instance.e2.entity_id},
                  {"start", instance.e2.span.start},
                  {"end", instance.e2.span.end}}},
                {"relation", instance.relation_id},
                {"label", to_string(instance.label)}};
    out << obj.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

std::vector<Triple> load_kr_triples(const std::filesystem::path& path) {
  std::vector<Triple> out;
  for_each_jsonl(path, [&](std::size_t line_no, const json& obj) {
    if (!obj.contains("e1") || !obj.contains("relation") || !obj.contains("e2")) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": triple needs e1/relation/e2");
    }
    out.push_back({obj["e1"].get<std::string>(), obj["relation"].get<std::string>(),
                   obj["e2"].get<std::string>(), TripleLabel::kNormal});
  });
  return out;
}

void save_kr_triples(const std::filesystem::path& path, const std::vector<Triple>& triples) {
  std::ostringstream out;
  for (const Triple& t : triples) {
    json obj = {{"e1", t.e1}, {"relation", t.relation_id}, {"e2", t.e2}};
    out << obj.dump() << "\n";
  }
  write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// XML annotation import

namespace {

struct TagMatch {
  std::string inner;
  std::size_t begin = 0;  // offset of '<tag'
  std::size_t end = 0;    // offset just past '</tag>'
};

std::optional<TagMatch> find_tag(const std::string& content, const std::string& tag,
                                 std::size_t from) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  std::size_t start = content.find(open, from);
  if (start == std::string::npos) return std::nullopt;
  std::size_t body = start + open.size();
  std::size_t stop = content.find(close, body);
  if (stop == std::string::npos) {
    throw ParseError("unclosed <" + tag + "> element");
  }
  return TagMatch{content.substr(body, stop - body), start, stop + close.size()};
}

constexpr std::pair<const char*, char> kXmlEscapes[] = {
    {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}, {"&amp;", '&'}};

std::string xml_unescape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool matched = false;
    if (text[pos] == '&') {
      for (const auto& [seq, ch] : kXmlEscapes) {
        const std::size_t len = std::strlen(seq);
        if (text.compare(pos, len, seq) == 0) {
          out.push_back(ch);
          pos += len;
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      out.push_back(text[pos]);
      ++pos;
    }
  }
  return out;
}

struct InlineSpan {
  std::string tag;  // "e1" or "e2"
  std::string text;
  Span span;
};

// Strips inline <e1>/<e2> markers out of the raw text, unescaping as it goes
// and recording the spans of the marker contents in the cleaned text. Span
// offsets are taken at append time, so escapes never shift them. The result
// is whitespace-normalized at the edges by collapsing leading runs before the
// first append.
std::string extract_inline_spans(const std::string& raw, std::vector<InlineSpan>& spans) {
  std::string clean;
  std::size_t pos = 0;
  auto append_plain = [&](char c) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!clean.empty() && clean.back() != ' ') clean.push_back(' ');
    } else {
      clean.push_back(c);
    }
  };
  while (pos < raw.size()) {
    bool matched = false;
    for (const char* tag : {"e1", "e2"}) {
      const std::string open = std::string("<") + tag + ">";
      const std::string close = std::string("</") + tag + ">";
      if (raw.compare(pos, open.size(), open) == 0) {
        std::size_t stop = raw.find(close, pos + open.size());
        if (stop == std::string::npos) {
          throw ParseError("unclosed inline <" + std::string(tag) + ">");
        }
        std::string content =
            normalize_whitespace(xml_unescape(raw.substr(pos + open.size(), stop - pos - open.size())));
        if (content.empty()) throw ParseError("empty inline entity span");
        InlineSpan s;
        s.tag = tag;
        s.text = content;
        s.span.start = static_cast<int>(clean.size());
        clean += content;
        s.span.end = static_cast<int>(clean.size());
        spans.push_back(std::move(s));
        pos = stop + close.size();
        matched = true;
        break;
      }
    }
    if (!matched) {
      if (raw[pos] == '&') {
        bool escaped = false;
        for (const auto& [seq, ch] : kXmlEscapes) {
          const std::size_t len = std::strlen(seq);
          if (raw.compare(pos, len, seq) == 0) {
            append_plain(ch);
            pos += len;
            escaped = true;
            break;
          }
        }
        if (escaped) continue;
      }
      append_plain(raw[pos]);
      ++pos;
    }
  }
  while (!clean.empty() && clean.back() == ' ') clean.pop_back();
  return clean;
}

struct EntityBlock {
  std::string id;
  std::string label;
  std::string description;
  std::vector<RawProperty> properties;
};

std::string trim(const std::string& s) { return normalize_whitespace(s); }

EntityBlock parse_entity_block(const std::string& content) {
  EntityBlock block;
  if (auto id = find_tag(content, "id", 0)) block.id = trim(xml_unescape(id->inner));
  if (auto label = find_tag(content, "label", 0)) block.label = trim(xml_unescape(label->inner));
  if (auto desc = find_tag(content, "description", 0)) {
    block.description = trim(xml_unescape(desc->inner));
  }
  if (auto props = find_tag(content, "property_value", 0)) {
    std::istringstream lines(props->inner);
    std::string line;
    while (std::getline(lines, line)) {
      std::string flat = trim(xml_unescape(line));
      if (flat.empty()) continue;
      // pid || plabel || value(s)
      auto first = flat.find("||");
      auto second = first == std::string::npos ? std::string::npos : flat.find("||", first + 2);
      if (first == std::string::npos || second == std::string::npos) {
        throw ParseError("malformed property line: " + flat);
      }
      RawProperty prop;
      prop.pid = trim(flat.substr(0, first));
      prop.plabel = trim(flat.substr(first + 2, second - first - 2));
      std::string value = trim(flat.substr(second + 2));
      if (!value.empty() && value.front() == '[') {
        json arr = json::parse(value, nullptr, false);
        if (!arr.is_discarded() && arr.is_array()) {
          for (const json& v : arr) prop.values.push_back(v.get<std::string>());
        } else {
          prop.values.push_back(value);
        }
      } else {
        prop.values.push_back(value);
      }
      block.properties.push_back(std::move(prop));
    }
  }
  if (block.id.empty() || block.label.empty()) {
    throw ParseError("entity block missing <id> or <label>");
  }
  return block;
}

}  // namespace

XmlImportResult import_annotation_xml(const std::filesystem::path& path,
                                      const std::string& default_relation,
                                      TripleLabel default_label) {
  const std::string content = read_file(path);
  XmlImportResult result;
  std::unordered_set<std::string> seen_entities;

  std::size_t cursor = 0;
  while (auto instance_tag = find_tag(content, "instance", cursor)) {
    cursor = instance_tag->end;
    const std::string& body = instance_tag->inner;

    auto text_tag = find_tag(body, "text", 0);
    if (!text_tag) throw ParseError(path.string() + ": instance missing <text>");
    std::vector<InlineSpan> inline_spans;
    std::string clean_text = extract_inline_spans(text_tag->inner, inline_spans);

    // Entity blocks live after the text element.
    auto e1_tag = find_tag(body, "e1", text_tag->end);
    auto e2_tag = find_tag(body, "e2", text_tag->end);
    if (!e1_tag || !e2_tag) {
      throw ParseError(path.string() + ": instance missing <e1> or <e2> block");
    }
    EntityBlock b1 = parse_entity_block(e1_tag->inner);
    EntityBlock b2 = parse_entity_block(e2_tag->inner);

    if (inline_spans.size() != 2) {
      throw ParseError(path.string() + ": expected exactly two inline entity spans");
    }
    // Match spans to blocks by label text; the annotation format does not
    // guarantee that inline <e1> corresponds to block <e1>.
    const InlineSpan* span1 = nullptr;
    const InlineSpan* span2 = nullptr;
    if (trim(inline_spans[0].text) == b1.label || trim(inline_spans[1].text) == b2.label) {
      span1 = &inline_spans[0];
      span2 = &inline_spans[1];
    } else if (trim(inline_spans[1].text) == b1.label || trim(inline_spans[0].text) == b2.label) {
      span1 = &inline_spans[1];
      span2 = &inline_spans[0];
    } else {
      // No label match: fall back to tag order.
      span1 = inline_spans[0].tag == "e1" ? &inline_spans[0] : &inline_spans[1];
      span2 = span1 == &inline_spans[0] ? &inline_spans[1] : &inline_spans[0];
    }

    FactInstance instance;
    instance.text = clean_text;
    instance.e1 = {b1.id, span1->span};
    instance.e2 = {b2.id, span2->span};
    if (auto rel = find_tag(body, "relation", 0)) {
      instance.relation_id = trim(xml_unescape(rel->inner));
    } else {
      instance.relation_id = default_relation;
    }
    if (instance.relation_id.empty()) {
      throw ParseError(path.string() +
                       ": instance has no <relation> and no default relation was given");
    }
    if (auto label = find_tag(body, "label", 0)) {
      instance.label = triple_label_from_string(trim(xml_unescape(label->inner)));
    } else {
      instance.label = default_label;
    }
    result.instances.push_back(std::move(instance));

    for (const EntityBlock& block : {b1, b2}) {
      if (!seen_entities.insert(block.id).second) continue;
      result.entities.push_back(
          make_entity_record(block.id, block.label, block.description, block.properties));
    }
  }
  return result;
}

}  // namespace patsnd
