#include "slimrag/pipeline.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "slimrag/errors.hpp"
#include "slimrag/rerank.hpp"
#include "slimrag/text.hpp"

namespace slimrag {

using nlohmann::json;

Mode mode_from_name(const std::string& name) {
    if (name == "slimplm") return Mode::slimplm;
    if (name == "vanilla") return Mode::vanilla;
    if (name == "cot") return Mode::cot;
    if (name == "direct_rag") return Mode::direct_rag;
    if (name == "self_eval") return Mode::self_eval;
    throw InvalidInput("unknown mode: " + name);
}

const char* mode_name(Mode mode) {
    switch (mode) {
        case Mode::slimplm: return "slimplm";
        case Mode::vanilla: return "vanilla";
        case Mode::cot: return "cot";
        case Mode::direct_rag: return "direct_rag";
        case Mode::self_eval: return "self_eval";
    }
    return "unknown";
}

PromptStyle prompt_style_from_name(const std::string& name) {
    if (name == "short_form") return PromptStyle::short_form;
    if (name == "long_form") return PromptStyle::long_form;
    throw InvalidInput("unknown prompt style: " + name);
}

const char* prompt_style_name(PromptStyle style) {
    return style == PromptStyle::short_form ? "short_form" : "long_form";
}

const char* plan_kind_name(GenerationPlan::Kind kind) {
    return kind == GenerationPlan::Kind::direct ? "direct" : "augmented";
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput("config is not valid JSON: " + std::string(e.what()));
    }

    PipelineConfig config;
    for (const auto& [key, value] : doc.items()) {
        if (key == "mode") config.mode = mode_from_name(value.get<std::string>());
        else if (key == "prompt_style")
            config.prompt_style = prompt_style_from_name(value.get<std::string>());
        else if (key == "reference_budget") config.reference_budget = value.get<int>();
        else if (key == "bm25_top_k") config.bm25_top_k = value.get<int>();
        else if (key == "rerank_top_k") config.rerank_top_k = value.get<int>();
        else if (key == "concurrency") config.concurrency = value.get<int>();
        else if (key == "reader_max_tokens") config.reader_max_tokens = value.get<int>();
        else if (key == "proxy_max_tokens") config.proxy_max_tokens = value.get<int>();
        else if (key == "endpoints") {
            if (!value.is_object()) throw InvalidInput("config endpoints must be an object");
            for (const auto& [role_key, spec] : value.items()) {
                ModelEndpoint ep;
                ep.role = role_from_name(role_key);
                if (!spec.contains("base_url") || !spec.contains("model"))
                    throw InvalidInput("endpoint " + role_key + " needs base_url and model");
                ep.base_url = spec["base_url"].get<std::string>();
                ep.model_name = spec["model"].get<std::string>();
                ep.api_key_env = spec.value("api_key_env", std::string());
                ep.cost_weight = spec.value("cost_weight", 1.0);
                if (ep.cost_weight < 0.0)
                    throw InvalidInput("endpoint " + role_key + " has negative cost_weight");
                config.endpoints[ep.role] = std::move(ep);
            }
        } else {
            throw InvalidInput("unknown config key: " + key);
        }
    }
    if (config.reference_budget <= 0) throw InvalidInput("reference_budget must be positive");
    if (config.bm25_top_k <= 0) throw InvalidInput("bm25_top_k must be positive");
    if (config.rerank_top_k <= 0) throw InvalidInput("rerank_top_k must be positive");
    if (config.concurrency <= 0) throw InvalidInput("concurrency must be positive");
    return config;
}

GenerationPlan route(const Verdict& verdict,
                     const std::vector<std::string>& surviving_queries,
                     const std::vector<std::string>& question_queries,
                     const std::string& question) {
    GenerationPlan plan;
    if (verdict.known) {
        plan.kind = GenerationPlan::Kind::direct;
        return plan;
    }
    plan.kind = GenerationPlan::Kind::augmented;
    plan.queries_used = question_queries;
    plan.queries_used.insert(plan.queries_used.end(), surviving_queries.begin(),
                             surviving_queries.end());
    if (plan.queries_used.empty()) plan.queries_used.push_back(question);
    return plan;
}

std::string assemble_context(const ReferenceSet& refs) {
    if (refs.entries.empty()) throw InvalidInput("assemble_context: no references");
    std::string out;
    for (std::size_t i = 0; i < refs.entries.size(); ++i) {
        const Document& doc = refs.entries[i].document;
        std::string entry = "[" + std::to_string(i + 1) + "] " + doc.title + ": " + doc.text;
        for (char& c : entry)
            if (c == '\n' || c == '\r') c = ' ';
        if (i > 0) out += "\n";
        out += entry;
    }
    return out;
}

CostLedger account_cost(const PipelineTrace& trace) {
    CostLedger ledger;
    for (const auto& tagged : trace.exchanges) {
        if (tagged.role == Role::embedder) continue;
        long tokens = tagged.exchange.prompt_tokens + tagged.exchange.completion_tokens;
        switch (tagged.role) {
            case Role::reader: ledger.reader_tokens += tokens; break;
            case Role::proxy: ledger.proxy_tokens += tokens; break;
            case Role::rewriter: ledger.rewriter_tokens += tokens; break;
            case Role::judge: ledger.judge_tokens += tokens; break;
            case Role::embedder: break;
        }
        if (tagged.role != Role::reader)
            ledger.weighted_extra_cost += static_cast<double>(tokens) * tagged.cost_weight;
    }
    if (ledger.reader_tokens <= 0)
        throw InvalidInput("cost accounting requires a reader exchange");
    ledger.extra_cost_ratio =
        ledger.weighted_extra_cost / static_cast<double>(ledger.reader_tokens);
    return ledger;
}

Pipeline::Pipeline(PipelineConfig config, Gateway& gateway,
                   std::shared_ptr<const InvertedIndex> index)
    : config_(std::move(config)), gateway_(gateway), index_(std::move(index)) {
    require_endpoint(Role::reader);
    switch (config_.mode) {
        case Mode::slimplm:
            require_endpoint(Role::proxy);
            require_endpoint(Role::judge);
            require_endpoint(Role::rewriter);
            require_endpoint(Role::embedder);
            break;
        case Mode::direct_rag:
        case Mode::self_eval:
            require_endpoint(Role::embedder);
            break;
        case Mode::vanilla:
        case Mode::cot:
            break;
    }
    bool may_retrieve = config_.mode == Mode::slimplm || config_.mode == Mode::direct_rag ||
                        config_.mode == Mode::self_eval;
    if (may_retrieve && !index_)
        throw InvalidInput("mode " + std::string(mode_name(config_.mode)) +
                           " may retrieve but no index was provided");
}

const ModelEndpoint& Pipeline::endpoint(Role role) const {
    auto it = config_.endpoints.find(role);
    if (it == config_.endpoints.end())
        throw InvalidInput("no endpoint configured for role " + std::string(role_name(role)));
    return it->second;
}

void Pipeline::require_endpoint(Role role) const {
    if (!config_.endpoints.count(role))
        throw InvalidInput("mode " + std::string(mode_name(config_.mode)) +
                           " requires a " + role_name(role) + " endpoint");
}

TaggedExchange Pipeline::tagged_chat(Role bill_to, const ModelEndpoint& ep,
                                     const std::vector<ChatMessage>& messages,
                                     const ChatParams& params) {
    TaggedExchange tagged;
    tagged.role = bill_to;
    tagged.cost_weight = ep.cost_weight;
    tagged.exchange = gateway_.chat(ep, messages, params);
    return tagged;
}

void Pipeline::retrieve_for_plan(GenerationPlan& plan, PipelineTrace& trace) {
    std::vector<std::pair<std::string, std::vector<ScoredDocument>>> per_query;
    for (const auto& query : plan.queries_used) {
        auto candidates = index_->search(query, static_cast<std::size_t>(config_.bm25_top_k));
        std::vector<ScoredDocument> ranked;
        if (!candidates.empty())
            ranked = rerank(gateway_, endpoint(Role::embedder), query, candidates,
                            static_cast<std::size_t>(config_.rerank_top_k), &trace.warnings);
        per_query.emplace_back(query, std::move(ranked));
    }
    plan.references =
        merge_references(per_query, static_cast<std::size_t>(config_.reference_budget));
}

void Pipeline::generate_final(PipelineTrace& trace, const Question& question) {
    TemplateSlots slots;
    slots.question = question.text;
    TemplateId id = TemplateId::vanilla;
    if (trace.plan.kind == GenerationPlan::Kind::augmented) {
        if (trace.plan.references.entries.empty()) {
            trace.warnings.push_back(
                "retrieval produced no references; answering without them");
        } else {
            slots.reference = assemble_context(trace.plan.references);
            id = config_.prompt_style == PromptStyle::short_form ? TemplateId::rag_short
                                                                 : TemplateId::rag_long;
        }
    }
    ChatParams params;
    params.temperature = 0.7;
    params.max_tokens = config_.reader_max_tokens;
    auto tagged = tagged_chat(Role::reader, endpoint(Role::reader), render(id, slots), params);
    trace.final_answer = tagged.exchange.response_text;
    trace.exchanges.push_back(std::move(tagged));
}

PipelineTrace Pipeline::run_slimplm(const Question& question) {
    PipelineTrace trace;
    trace.question_id = question.id;

    TemplateSlots proxy_slots;
    proxy_slots.question = question.text;
    ChatParams proxy_params;
    proxy_params.temperature = 0.7;
    proxy_params.max_tokens = config_.proxy_max_tokens;
    auto proxy_exchange = tagged_chat(Role::proxy, endpoint(Role::proxy),
                                      render(TemplateId::vanilla, proxy_slots), proxy_params);
    trace.heuristic_answer = proxy_exchange.exchange.response_text;
    trace.exchanges.push_back(std::move(proxy_exchange));

    Verdict verdict;
    std::vector<std::string> question_queries;
    std::vector<ClaimQuery> claim_queries;

    if (trace.heuristic_answer.empty()) {
        verdict.known = false;
        verdict.fallback_applied = true;
        trace.warnings.push_back("proxy produced an empty heuristic answer");
        question_queries.push_back(question.text);
    } else {
        auto judge_future = std::async(std::launch::async, [&] {
            return judge(gateway_, endpoint(Role::judge), question.text,
                         trace.heuristic_answer);
        });
        auto rewrite_future = std::async(std::launch::async, [&] {
            return rewrite(gateway_, endpoint(Role::rewriter), question.text,
                           trace.heuristic_answer);
        });

        try {
            JudgeOutcome outcome = judge_future.get();
            verdict = outcome.verdict;
            trace.exchanges.push_back(
                {Role::judge, endpoint(Role::judge).cost_weight, std::move(outcome.exchange)});
        } catch (const std::exception& e) {
            verdict.known = false;
            verdict.fallback_applied = true;
            trace.warnings.push_back(std::string("judge call failed, retrieving: ") + e.what());
        }

        try {
            RewriteOutcome outcome = rewrite_future.get();
            trace.exchanges.push_back({Role::rewriter, endpoint(Role::rewriter).cost_weight,
                                       std::move(outcome.exchange)});
            for (auto& w : outcome.warnings) trace.warnings.push_back(std::move(w));
            question_queries = outcome.result.question_queries;
            claim_queries = outcome.result.claim_queries;
            trace.rewrite_result = std::move(outcome.result);
        } catch (const RewriteError& e) {
            trace.warnings.push_back(std::string("rewrite unparseable, using the question: ") +
                                     e.what());
            question_queries.push_back(question.text);
        } catch (const std::exception& e) {
            trace.warnings.push_back(std::string("rewrite call failed, using the question: ") +
                                     e.what());
            question_queries.push_back(question.text);
        }

        JudgeFn judge_fn = [&](const std::string& question_like,
                               const std::string& answer_like) {
            JudgeOutcome outcome =
                judge(gateway_, endpoint(Role::judge), question_like, answer_like);
            trace.exchanges.push_back(
                {Role::judge, endpoint(Role::judge).cost_weight, std::move(outcome.exchange)});
            return outcome.verdict;
        };
        FilterOutcome filtered = filter_claim_queries(claim_queries, judge_fn);
        trace.surviving_queries = std::move(filtered.kept_queries);
        for (auto& w : filtered.warnings) trace.warnings.push_back(std::move(w));
    }

    trace.verdict = verdict;
    trace.plan = route(verdict, trace.surviving_queries, question_queries, question.text);
    if (trace.plan.kind == GenerationPlan::Kind::augmented) retrieve_for_plan(trace.plan, trace);
    generate_final(trace, question);
    return trace;
}

PipelineTrace Pipeline::run_reader_only(const Question& question, TemplateId template_id) {
    PipelineTrace trace;
    trace.question_id = question.id;
    trace.plan.kind = GenerationPlan::Kind::direct;

    TemplateSlots slots;
    slots.question = question.text;
    ChatParams params;
    params.temperature = 0.7;
    params.max_tokens = config_.reader_max_tokens;
    auto tagged = tagged_chat(Role::reader, endpoint(Role::reader),
                              render(template_id, slots), params);
    trace.final_answer = tagged.exchange.response_text;
    trace.exchanges.push_back(std::move(tagged));
    return trace;
}

PipelineTrace Pipeline::run_direct_rag(const Question& question) {
    PipelineTrace trace;
    trace.question_id = question.id;
    trace.plan.kind = GenerationPlan::Kind::augmented;
    trace.plan.queries_used.push_back(question.text);
    retrieve_for_plan(trace.plan, trace);
    generate_final(trace, question);
    return trace;
}

PipelineTrace Pipeline::run_self_eval(const Question& question) {
    PipelineTrace trace;
    trace.question_id = question.id;

    TemplateSlots slots;
    slots.question = question.text;
    ChatParams params;
    params.temperature = 0.0;
    params.max_tokens = 8;
    const ModelEndpoint& reader = endpoint(Role::reader);
    auto decision = tagged_chat(Role::judge, reader,
                                render(TemplateId::self_eval, slots), params);

    Verdict verdict;
    verdict.raw_output = decision.exchange.response_text;
    auto tokens = tokenize(decision.exchange.response_text);
    if (!tokens.empty() && tokens.front() == "yes") {
        verdict.known = true;
    } else if (!tokens.empty() && tokens.front() == "no") {
        verdict.known = false;
    } else {
        verdict.known = false;
        verdict.fallback_applied = true;
        trace.warnings.push_back("self-eval answer unrecognized, retrieving: " +
                                 decision.exchange.response_text);
    }
    trace.exchanges.push_back(std::move(decision));
    trace.verdict = verdict;

    trace.plan = route(verdict, {}, {}, question.text);
    if (trace.plan.kind == GenerationPlan::Kind::augmented) retrieve_for_plan(trace.plan, trace);
    generate_final(trace, question);
    return trace;
}

PipelineTrace Pipeline::run_question(const Question& question) {
    if (question.text.empty()) throw InvalidInput("question " + question.id + " has no text");
    switch (config_.mode) {
        case Mode::slimplm: return run_slimplm(question);
        case Mode::vanilla: return run_reader_only(question, TemplateId::vanilla);
        case Mode::cot: return run_reader_only(question, TemplateId::cot);
        case Mode::direct_rag: return run_direct_rag(question);
        case Mode::self_eval: return run_self_eval(question);
    }
    throw InvalidInput("unhandled mode");
}

namespace {

std::string result_line(const PipelineTrace& trace) {
    CostLedger ledger = account_cost(trace);
    json line;
    line["id"] = trace.question_id;
    line["answer"] = trace.final_answer;
    line["plan_kind"] = plan_kind_name(trace.plan.kind);
    line["queries"] = trace.plan.queries_used;
    line["cost"] = json{{"reader_tokens", ledger.reader_tokens},
                        {"proxy_tokens", ledger.proxy_tokens},
                        {"rewriter_tokens", ledger.rewriter_tokens},
                        {"judge_tokens", ledger.judge_tokens},
                        {"weighted_extra_cost", ledger.weighted_extra_cost},
                        {"extra_cost_ratio", ledger.extra_cost_ratio}};
    return line.dump();
}

}  // namespace

RunSummary Pipeline::run_dataset(const std::vector<Question>& dataset,
                                 const std::string& out_path,
                                 std::vector<PipelineTrace>* traces_out) {
    if (dataset.empty()) throw InvalidInput("dataset is empty");
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + out_path);

    RunSummary summary;
    summary.total = dataset.size();
    if (traces_out) traces_out->assign(dataset.size(), PipelineTrace{});

    std::vector<std::optional<std::string>> lines(dataset.size());
    std::mutex mu;
    std::condition_variable line_ready;
    std::atomic<std::size_t> next_job{0};

    auto worker = [&] {
        while (true) {
            std::size_t i = next_job.fetch_add(1);
            if (i >= dataset.size()) break;
            std::string line;
            bool ok = true;
            try {
                PipelineTrace trace = run_question(dataset[i]);
                line = result_line(trace);
                if (traces_out) (*traces_out)[i] = std::move(trace);
            } catch (const std::exception& e) {
                ok = false;
                line = json{{"id", dataset[i].id}, {"error", e.what()}}.dump();
            }
            {
                std::lock_guard lock(mu);
                lines[i] = std::move(line);
                if (ok)
                    ++summary.succeeded;
                else
                    ++summary.failed;
            }
            line_ready.notify_all();
        }
    };

    std::size_t worker_count =
        std::min<std::size_t>(static_cast<std::size_t>(config_.concurrency), dataset.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);

    {
        std::unique_lock lock(mu);
        for (std::size_t next_write = 0; next_write < lines.size(); ++next_write) {
            line_ready.wait(lock, [&] { return lines[next_write].has_value(); });
            out << *lines[next_write] << "\n";
            out.flush();
        }
    }
    for (auto& t : threads) t.join();

    summary.run_failed = summary.failed * 2 > summary.total;
    return summary;
}

}  // namespace slimrag
