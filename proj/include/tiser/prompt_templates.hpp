#pragma once

#include <set>
#include <string>

namespace tiser {

enum class Stage { reasoning, timeline, reflection };

// Prompt texts with {question}, {context}, {gold_instruction}, {gold},
// {original_prompt} and {prior_trace} placeholders. The shipped defaults
// live in templates/ and are embedded here verbatim so the library works
// without files on disk.
struct PromptTemplates {
    std::string tiser;
    std::string standard;
    std::string revision;

    static const PromptTemplates& defaults();

    // Loads any of the three files present under dir (tiser.txt,
    // standard.txt, revision.txt), keeping defaults for the rest.
    static PromptTemplates load_dir(const std::string& dir);
};

std::string replace_all(std::string text, std::string_view key, std::string_view value);

// Template for an ablated prompt containing only the given stages (the
// answer step is always present).
std::string build_ablation_template(const std::set<Stage>& stages);

const char* to_string(Stage s);

}  // namespace tiser
