#pragma once

#include <string_view>

/// Data files compiled into the library.
namespace genex::resources {

std::string_view stopwords_en_txt();
std::string_view entities_en_txt();
std::string_view stance_lexicon_tsv();
std::string_view toxicity_terms_tsv();
std::string_view zero_shot_txt();
std::string_view few_shot_txt();

}  // namespace genex::resources
