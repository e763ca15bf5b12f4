#include "genex/persona/prompt.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "genex/common/error.hpp"
#include "genex/common/hash.hpp"
#include "genex/corpus/resources.hpp"
#include "json.hpp"

namespace genex::persona {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string json_string(const std::string& s) {
  return nlohmann::json(s).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string_view class_word(stance::Leaning l) {
  switch (l) {
    case stance::Leaning::Democrat:
      return "Democrat";
    case stance::Leaning::Republican:
      return "Republican";
    case stance::Leaning::Neutral:
      break;
  }
  return "Neutral";
}

}  // namespace

std::string_view to_string(LeaningFormat f) {
  return f == LeaningFormat::ClassWord ? "class_word" : "numeric";
}

LeaningFormat leaning_format_from_string(std::string_view s) {
  if (s == "numeric") return LeaningFormat::Numeric;
  if (s == "class_word") return LeaningFormat::ClassWord;
  throw ConfigError("unknown leaning format '" + std::string(s) + "'");
}

PromptTemplates::PromptTemplates(std::string zero_shot, std::string few_shot)
    : zero_shot_(std::move(zero_shot)),
      few_shot_(std::move(few_shot)),
      zero_digest_(sha256_hex(zero_shot_)),
      few_digest_(sha256_hex(few_shot_)) {}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t(std::string(resources::zero_shot_txt()),
                                 std::string(resources::few_shot_txt()));
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  return PromptTemplates(read_file(dir / "zero_shot.txt"), read_file(dir / "few_shot.txt"));
}

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) throw RenderError("unterminated placeholder in template");
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    const auto it = values.find(name);
    if (it == values.end()) throw RenderError("no value for template slot {" + name + "}");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

std::string render_list(std::span<const std::string> items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += json_string(items[i]);
  }
  out += "]";
  return out;
}

std::string render_thread(std::span<const corpus::RawTweet> conversation) {
  std::string out;
  for (std::size_t i = 0; i < conversation.size(); ++i) {
    const auto& t = conversation[i];
    if (i > 0) out += '\n';
    out += '@';
    out += t.username ? *t.username : t.author_id;
    out += ": ";
    out += t.text;
  }
  return out;
}

std::string format_leaning(double leaning) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", leaning);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

RenderedPrompt render_prompt(const PersonaSpec& spec, std::span<const corpus::RawTweet> conversation,
                             const PromptTemplates& templates, const RenderOptions& options) {
  if (conversation.empty()) throw RenderError("cannot render a prompt without a parent tweet");
  RenderedPrompt out;
  out.thread_rendering = render_thread(conversation);
  out.template_id = spec.strategy();
  std::map<std::string, std::string> values{{"thread", out.thread_rendering}};
  if (const auto* zs = std::get_if<ZeroShotPersona>(&spec.variant)) {
    values["leaning"] = options.leaning_format == LeaningFormat::Numeric
                            ? format_leaning(zs->leaning)
                            : std::string(class_word(zs->leaning_class));
    out.bytes = substitute(templates.zero_shot(), values);
  } else {
    const auto& fs = std::get<FewShotPersona>(spec.variant);
    std::vector<std::string> texts;
    texts.reserve(fs.sample.size());
    for (const auto& t : fs.sample) texts.push_back(t.text);
    values["usernames"] = render_list(fs.usernames);
    values["biographies"] = render_list(fs.bios);
    values["tweets"] = render_list(texts);
    out.bytes = substitute(templates.few_shot(), values);
  }
  out.content_hash = sha256_hex(out.bytes);
  return out;
}

RenderedPrompt render_prompt(const PersonaSpec& spec, const corpus::Thread& thread,
                             const PromptTemplates& templates, const RenderOptions& options) {
  const corpus::RawTweet parent[] = {thread.parent};
  return render_prompt(spec, parent, templates, options);
}

}  // namespace genex::persona
