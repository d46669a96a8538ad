#include "tiser/prompt_templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace tiser {

namespace {

const char* kTiserTemplate =
    R"(You are an AI assistant that uses a Chain of Thought (CoT) approach with reflection to answer queries. Follow these steps:

1. Reason through the problem step by step within the <reasoning> tags.
2. Given your previous reasoning, identify relevant temporal events in the given context for answering the given question within <timeline> tags. Assume relations in the context are unidirectional.
3. Reflect on your reasoning and the timeline to check for any errors or improvements within the <reflection> tags.
4. Make any necessary adjustments based on your reflection. If there is additional reasoning required, go back to Step 1 (reason through the problem step-by-step), otherwise move to the next step (Step 5).
5. Provide your final, concise answer within the <answer> tags. If the answer is a number, just output the number, nothing else. Otherwise, output the entity or event without any additional comments.

Additional Instructions:

{gold_instruction}- The <reasoning>, <reflection>, and <timeline> sections are for your internal reasoning process. All the reflection and the timeline have to be contained inside the thinking section.
- Do not use enumerations or lists when writing; use plain text such as paragraphs.
- The response to the query must be entirely contained within the <answer> tags.

Response Format:

<reasoning>
[Your step-by-step reasoning goes here. This is your internal thought process.]
<timeline> [Relevant temporal events for answering the given question.]</timeline>
<reflection>
[Your reflection on your reasoning, checking for errors or changes required.]
</reflection>
[Any adjustments to your thinking based on your reflection.]
</reasoning>
<answer> [Your final, concise answer to the query.]</answer>

Question: {question}

Temporal Context: {context}
)";

const char* kStandardTemplate =
    R"(You are an AI assistant that has to respond to questions given a context.

Question: {question}

Temporal Context: {context}
)";

const char* kRevisionTemplate =
    R"({original_prompt}

---
Previous attempt:
{prior_trace}

Your timeline or reflection indicated problems. Revise your reasoning, rebuild the timeline, and reflect again, then provide your final answer in the same response format.
)";

}  // namespace

const PromptTemplates& PromptTemplates::defaults() {
    static const PromptTemplates t{kTiserTemplate, kStandardTemplate, kRevisionTemplate};
    return t;
}

PromptTemplates PromptTemplates::load_dir(const std::string& dir) {
    PromptTemplates t = defaults();
    auto load = [&](const char* name, std::string& into) {
        std::filesystem::path p = std::filesystem::path(dir) / name;
        std::ifstream in(p);
        if (!in) return;
        std::ostringstream ss;
        ss << in.rdbuf();
        into = ss.str();
    };
    load("tiser.txt", t.tiser);
    load("standard.txt", t.standard);
    load("revision.txt", t.revision);
    return t;
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

std::string build_ablation_template(const std::set<Stage>& stages) {
    bool reasoning = stages.count(Stage::reasoning) > 0;
    bool timeline = stages.count(Stage::timeline) > 0;
    bool reflection = stages.count(Stage::reflection) > 0;

    std::vector<std::string> steps;
    if (reasoning)
        steps.push_back("Reason through the problem step by step within the <reasoning> tags.");
    if (timeline) {
        std::string s = reasoning ? "Given your previous reasoning, identify" : "Identify";
        s += " relevant temporal events in the given context for answering the given question "
             "within <timeline> tags. Assume relations in the context are unidirectional.";
        steps.push_back(s);
    }
    if (reflection) {
        std::string s = "Reflect on your ";
        if (reasoning && timeline) s += "reasoning and the timeline";
        else if (reasoning) s += "reasoning";
        else if (timeline) s += "timeline";
        else s += "answer";
        s += " to check for any errors or improvements within the <reflection> tags.";
        steps.push_back(s);
        steps.push_back("Make any necessary adjustments based on your reflection, then move to "
                        "the next step.");
    }
    steps.push_back("Provide your final, concise answer within the <answer> tags. If the answer "
                    "is a number, just output the number, nothing else. Otherwise, output the "
                    "entity or event without any additional comments.");

    std::string out =
        "You are an AI assistant that uses a Chain of Thought (CoT) approach to answer "
        "queries. Follow these steps:\n\n";
    for (size_t i = 0; i < steps.size(); ++i)
        out += std::to_string(i + 1) + ". " + steps[i] + "\n";

    out += "\nAdditional Instructions:\n\n{gold_instruction}";
    if (reasoning || timeline || reflection) {
        out += "- The ";
        std::vector<std::string> tags;
        if (reasoning) tags.push_back("<reasoning>");
        if (reflection) tags.push_back("<reflection>");
        if (timeline) tags.push_back("<timeline>");
        for (size_t i = 0; i < tags.size(); ++i) {
            if (i > 0) out += i + 1 == tags.size() ? " and " : ", ";
            out += tags[i];
        }
        out += tags.size() > 1 ? " sections are" : " section is";
        out += " for your internal reasoning process.\n";
    }
    out += "- Do not use enumerations or lists when writing; use plain text such as "
           "paragraphs.\n";
    out += "- The response to the query must be entirely contained within the <answer> tags.\n";

    out += "\nResponse Format:\n\n";
    if (reasoning) {
        out += "<reasoning> \n[Your step-by-step reasoning goes here.]\n";
        if (timeline)
            out += "<timeline> [Relevant temporal events for answering the given "
                   "question.]</timeline> \n";
        if (reflection)
            out += "<reflection> \n[Your reflection on your reasoning.]\n</reflection> \n";
        out += "</reasoning> \n";
    } else {
        if (timeline)
            out += "<timeline> [Relevant temporal events for answering the given "
                   "question.]</timeline> \n";
        if (reflection)
            out += "<reflection> \n[Your reflection on your answer.]\n</reflection> \n";
    }
    out += "<answer> [Your final, concise answer to the query.]</answer>\n";

    out += "\nQuestion: {question}\n\nTemporal Context: {context}\n";
    return out;
}

const char* to_string(Stage s) {
    switch (s) {
        case Stage::reasoning: return "reasoning";
        case Stage::timeline: return "timeline";
        case Stage::reflection: return "reflection";
    }
    return "?";
}

}  // namespace tiser
