#pragma once

// Scenario file format, runner, trace emitter and the consistency checker
// glue. Scenarios are line-oriented text: "tick action args...", comments
// start with '#', events sorted by tick. The runner executes the schedule
// over the simulated network, then holds a quiescence window (no injected
// events, no losses) and evaluates convergence per partition group.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "edgefs/checker.hpp"
#include "edgefs/node.hpp"
#include "edgefs/simnet.hpp"

namespace edgefs::scenario {

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_no(line) {}
    std::size_t line_no;
};

struct ScenarioEvent {
    enum class Action {
        Spawn,
        Join,
        Partition,
        Heal,
        Create,
        Delete,
        Rename,
        Write,
        DuplicateNext,
        Checkpoint,
    };

    Tick at = 0;
    Action action = Action::Spawn;
    std::string node;                              // subject node token
    std::string arg1;                              // path / host / bootstrap name / label
    std::string arg2;                              // new name / write payload
    std::vector<std::vector<std::string>> groups;  // partition groups
    std::size_t line_no = 0;
};

struct Scenario {
    std::vector<ScenarioEvent> events;
    std::vector<std::string> node_tokens; // first-appearance order; ids follow it
    Tick last_event_tick = 0;

    [[nodiscard]] NodeId id_of(const std::string& token) const {
        for (std::size_t i = 0; i < node_tokens.size(); ++i) {
            if (node_tokens[i] == token) return static_cast<NodeId>(i + 1);
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        if (tok.front() == '#') break;
        tokens.push_back(tok);
    }
    return tokens;
}

inline std::vector<std::vector<std::string>> parse_groups(const std::string& spec,
                                                          std::size_t line_no) {
    std::vector<std::vector<std::string>> groups;
    std::vector<std::string> group;
    std::string token;
    auto flush_token = [&] {
        if (!token.empty()) {
            group.push_back(token);
            token.clear();
        }
    };
    for (char c : spec) {
        if (c == ',') {
            flush_token();
        } else if (c == '|') {
            flush_token();
            if (group.empty()) throw ParseError(line_no, "empty partition group");
            groups.push_back(std::move(group));
            group.clear();
        } else {
            token += c;
        }
    }
    flush_token();
    if (group.empty()) throw ParseError(line_no, "empty partition group");
    groups.push_back(std::move(group));
    return groups;
}

} // namespace detail

inline Scenario parse(std::istream& in) {
    Scenario sc;
    std::map<std::string, bool> spawned;
    std::string line;
    std::size_t line_no = 0;
    Tick prev_tick = 0;

    auto touch_node = [&](const std::string& token) {
        for (const auto& t : sc.node_tokens) {
            if (t == token) return;
        }
        sc.node_tokens.push_back(token);
    };
    auto need_spawned = [&](const std::string& token) {
        if (!spawned.contains(token)) {
            throw ParseError(line_no, "node '" + token + "' used before spawn");
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = detail::tokenize(line);
        if (tokens.empty()) continue;

        ScenarioEvent ev;
        ev.line_no = line_no;
        try {
            ev.at = std::stoull(tokens[0]);
        } catch (const std::exception&) {
            throw ParseError(line_no, "expected a tick number, got '" + tokens[0] + "'");
        }
        if (ev.at == 0) throw ParseError(line_no, "ticks start at 1");
        if (ev.at < prev_tick) throw ParseError(line_no, "events must be sorted by tick");
        prev_tick = ev.at;

        if (tokens.size() < 2) throw ParseError(line_no, "missing action");
        const std::string& action = tokens[1];
        auto want = [&](std::size_t n) {
            if (tokens.size() != n) {
                throw ParseError(line_no, "wrong number of arguments for '" + action + "'");
            }
        };

        if (action == "spawn") {
            if (tokens.size() != 3 && tokens.size() != 4) {
                throw ParseError(line_no, "spawn takes a node and an optional bootstrap name");
            }
            ev.action = ScenarioEvent::Action::Spawn;
            ev.node = tokens[2];
            if (spawned.contains(ev.node)) throw ParseError(line_no, "node spawned twice");
            if (tokens.size() == 4) ev.arg1 = tokens[3];
            spawned[ev.node] = true;
            touch_node(ev.node);
        } else if (action == "join") {
            want(4);
            ev.action = ScenarioEvent::Action::Join;
            ev.node = tokens[2];
            ev.arg1 = tokens[3];
            need_spawned(ev.node);
            need_spawned(ev.arg1);
        } else if (action == "partition") {
            want(3);
            ev.action = ScenarioEvent::Action::Partition;
            ev.groups = detail::parse_groups(tokens[2], line_no);
            for (const auto& g : ev.groups) {
                for (const auto& t : g) need_spawned(t);
            }
        } else if (action == "heal") {
            want(2);
            ev.action = ScenarioEvent::Action::Heal;
        } else if (action == "create" || action == "delete") {
            want(4);
            ev.action = action == "create" ? ScenarioEvent::Action::Create
                                           : ScenarioEvent::Action::Delete;
            ev.node = tokens[2];
            ev.arg1 = tokens[3];
            need_spawned(ev.node);
        } else if (action == "rename") {
            want(5);
            ev.action = ScenarioEvent::Action::Rename;
            ev.node = tokens[2];
            ev.arg1 = tokens[3];
            ev.arg2 = tokens[4];
            need_spawned(ev.node);
        } else if (action == "write") {
            want(5);
            ev.action = ScenarioEvent::Action::Write;
            ev.node = tokens[2];
            ev.arg1 = tokens[3];
            ev.arg2 = tokens[4];
            need_spawned(ev.node);
        } else if (action == "duplicate-next-message") {
            want(3);
            ev.action = ScenarioEvent::Action::DuplicateNext;
            ev.node = tokens[2];
            need_spawned(ev.node);
        } else if (action == "checkpoint") {
            want(3);
            ev.action = ScenarioEvent::Action::Checkpoint;
            ev.arg1 = tokens[2];
        } else {
            throw ParseError(line_no, "unknown action '" + action + "'");
        }
        sc.events.push_back(std::move(ev));
    }
    if (!sc.events.empty()) sc.last_event_tick = sc.events.back().at;
    return sc;
}

inline Scenario parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

inline Scenario parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    return parse(in);
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
    NetConfig net;
    ReachabilityConfig reach;
    bool audit = false;              // structural + visibility audits per event
    Tick quiescence_periods = 20;    // window length in ping periods
    bool collect_trace = true;
};

struct CheckResult {
    std::string label;
    Tick tick = 0;
    bool converged = true;
    std::vector<std::string> divergences;
};

struct NodeSummary {
    std::string token;
    std::string member_name;
    std::uint64_t member_set_hash = 0;
    std::uint64_t visible_tree_hash = 0;
    std::size_t visible_files = 0;
};

struct ConsistencyReport {
    bool converged = false; // end-of-run check after quiescence
    Tick final_tick = 0;
    std::vector<CheckResult> checkpoints;
    std::vector<NodeSummary> nodes;
    std::vector<std::string> conflicts;  // conflicted names in the final view
    std::vector<std::string> divergence; // final check details
    std::vector<std::string> violations; // audit failures; aborts the run
    std::vector<std::string> event_prefix_at_violation;

    [[nodiscard]] bool all_pass() const {
        if (!converged || !violations.empty()) return false;
        for (const auto& c : checkpoints) {
            if (!c.converged) return false;
        }
        return true;
    }

    [[nodiscard]] std::string to_text() const {
        std::ostringstream out;
        out << "converged: " << (converged ? "true" : "false") << '\n';
        out << "final.tick: " << final_tick << '\n';
        for (const auto& c : checkpoints) {
            out << "checkpoint." << c.label << ".tick: " << c.tick << '\n';
            out << "checkpoint." << c.label
                << ".converged: " << (c.converged ? "true" : "false") << '\n';
            for (const auto& d : c.divergences) {
                out << "checkpoint." << c.label << ".divergence: " << d << '\n';
            }
        }
        for (const auto& n : nodes) {
            out << "node." << n.token << ".name: " << n.member_name << '\n';
            out << "node." << n.token << ".member_set_hash: " << std::hex << n.member_set_hash
                << std::dec << '\n';
            out << "node." << n.token << ".visible_tree_hash: " << std::hex << n.visible_tree_hash
                << std::dec << '\n';
            out << "node." << n.token << ".visible_files: " << n.visible_files << '\n';
        }
        out << "conflicts.count: " << conflicts.size() << '\n';
        for (std::size_t i = 0; i < conflicts.size(); ++i) {
            out << "conflict." << i << ": " << conflicts[i] << '\n';
        }
        out << "divergence.count: " << divergence.size() << '\n';
        for (const auto& d : divergence) out << "divergence: " << d << '\n';
        out << "violations.count: " << violations.size() << '\n';
        for (const auto& v : violations) out << "violation: " << v << '\n';
        for (const auto& e : event_prefix_at_violation) out << "violation.event: " << e << '\n';
        out << "all_pass: " << (all_pass() ? "true" : "false") << '\n';
        return out.str();
    }
};

struct RunResult {
    ConsistencyReport report;
    std::string trace;
};

class Runner {
public:
    Runner(Scenario scenario, RunOptions options)
        : sc_(std::move(scenario)), opts_(options), net_(options.net) {
        net_.node_label = [this](NodeId id) { return token_of(id); };
        if (opts_.collect_trace) {
            net_.trace = [this](Tick t, NodeId n, std::string_view dir, std::string_view tag,
                                const std::string& summary) {
                trace_line(t, token_of(n), dir, tag, summary);
            };
        }
    }

    [[nodiscard]] SimNet& net() { return net_; }
    [[nodiscard]] Node* node(const std::string& token) {
        auto it = nodes_.find(sc_.id_of(token));
        return it == nodes_.end() ? nullptr : it->second.get();
    }
    [[nodiscard]] const std::string& trace() const { return trace_; }
    [[nodiscard]] const std::vector<std::string>& op_outcomes() const { return op_outcomes_; }

    // Executes scenario events and ticks until `tick` inclusive. Checkpoints
    // scheduled on a tick run after that tick's deliveries and timers.
    void advance_to(Tick tick) {
        while (net_.now() < tick && !aborted_) {
            Tick t = net_.now() + 1;
            std::vector<const ScenarioEvent*> checkpoints;
            while (cursor_ < sc_.events.size() && sc_.events[cursor_].at == t) {
                const ScenarioEvent& ev = sc_.events[cursor_];
                if (ev.action == ScenarioEvent::Action::Checkpoint) {
                    checkpoints.push_back(&ev); // evaluated after this tick settles
                } else {
                    apply(ev);
                }
                ++cursor_;
            }
            net_.step_tick();
            if (opts_.audit) audit();
            for (const ScenarioEvent* cp : checkpoints) {
                trace_line(t, "-", "event", "chck", cp->arg1);
                report_.checkpoints.push_back(check(cp->arg1));
            }
        }
    }

    void run_events() { advance_to(sc_.last_event_tick); }

    // Quiescence: no injected events, no losses; convergence must complete.
    void quiesce() {
        net_.set_loss_probability(0.0);
        advance_to(sc_.last_event_tick + opts_.quiescence_periods * opts_.reach.ping_period);
    }

    RunResult run() {
        run_events();
        if (!aborted_) quiesce();
        finalize();
        return RunResult{report_, trace_};
    }

    // Convergence check against the union oracle under the current ground
    // truth partition.
    CheckResult check(const std::string& label) {
        CheckResult result{label, net_.now(), true, {}};
        std::map<std::size_t, std::vector<const NodeState*>> groups;
        for (auto& [id, node] : nodes_) {
            groups[net_.partition().group_of(id)].push_back(&node->state());
        }
        for (auto& [gi, states] : groups) {
            // every spawned node must have made it into the system
            for (const NodeState* s : states) {
                if (!s->named()) {
                    result.divergences.push_back("node " + std::to_string(s->address) +
                                                 " still unnamed");
                }
            }
            std::vector<const NodeState*> named;
            for (const NodeState* s : states) {
                if (s->named()) named.push_back(s);
            }
            if (named.empty()) continue;

            const std::string member_set = checker::canonical_member_set(*named.front());
            for (const NodeState* s : named) {
                if (checker::canonical_member_set(*s) != member_set) {
                    result.divergences.push_back("member sets differ within group of " +
                                                 named.front()->self().value);
                    break;
                }
            }

            const FolderNode expected = checker::expected_view(named);
            const std::string want = checker::canonical_tree_text(expected);
            for (const NodeState* s : named) {
                const std::string have = checker::canonical_visible_text(*s);
                if (have != want) {
                    result.divergences.push_back("visible tree of " + s->self().value +
                                                 " diverges from oracle");
                }
            }
        }
        result.converged = result.divergences.empty();
        return result;
    }

private:
    void apply(const ScenarioEvent& ev) {
        executed_events_.push_back(format_event(ev));
        switch (ev.action) {
            case ScenarioEvent::Action::Spawn: {
                NodeId id = sc_.id_of(ev.node);
                auto node = std::make_unique<Node>(net_, id, static_cast<Port>(7000 + id),
                                                   opts_.reach, opts_.net.seed);
                wire_node(ev.node, *node);
                trace_line(ev.at, ev.node, "event", "spawn", ev.arg1);
                if (!ev.arg1.empty()) node->bootstrap(ev.arg1, ev.at);
                nodes_[id] = std::move(node);
                break;
            }
            case ScenarioEvent::Action::Join: {
                NodeId host = sc_.id_of(ev.arg1);
                trace_line(ev.at, ev.node, "event", "join", "via=" + ev.arg1);
                nodes_[sc_.id_of(ev.node)]->begin_join(host, static_cast<Port>(7000 + host),
                                                       ev.at);
                break;
            }
            case ScenarioEvent::Action::Partition: {
                std::vector<std::vector<NodeId>> groups;
                std::string summary;
                for (const auto& g : ev.groups) {
                    std::vector<NodeId> ids;
                    for (const auto& t : g) ids.push_back(sc_.id_of(t));
                    groups.push_back(std::move(ids));
                    if (!summary.empty()) summary += "|";
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        summary += (i ? "," : "") + g[i];
                    }
                }
                net_.partition().set(std::move(groups));
                trace_line(ev.at, "-", "event", "part", summary);
                break;
            }
            case ScenarioEvent::Action::Heal:
                net_.partition().heal();
                trace_line(ev.at, "-", "event", "heal", "");
                break;
            case ScenarioEvent::Action::Create:
                trace_line(ev.at, ev.node, "event", "crea", ev.arg1);
                nodes_[sc_.id_of(ev.node)]->submit(LocalOp{LocalOp::Kind::Create, ev.arg1});
                break;
            case ScenarioEvent::Action::Delete:
                trace_line(ev.at, ev.node, "event", "dele", ev.arg1);
                nodes_[sc_.id_of(ev.node)]->submit(LocalOp{LocalOp::Kind::Delete, ev.arg1});
                break;
            case ScenarioEvent::Action::Rename:
                trace_line(ev.at, ev.node, "event", "rena", ev.arg1 + " " + ev.arg2);
                nodes_[sc_.id_of(ev.node)]->submit(
                    LocalOp{LocalOp::Kind::Rename, ev.arg1, ev.arg2});
                break;
            case ScenarioEvent::Action::Write: {
                trace_line(ev.at, ev.node, "event", "writ", ev.arg1);
                LocalOp op{LocalOp::Kind::Write, ev.arg1};
                op.content.assign(ev.arg2.begin(), ev.arg2.end());
                nodes_[sc_.id_of(ev.node)]->submit(std::move(op));
                break;
            }
            case ScenarioEvent::Action::DuplicateNext:
                trace_line(ev.at, ev.node, "event", "dupl", "next message duplicated");
                net_.duplicate_next_from(sc_.id_of(ev.node));
                break;
            case ScenarioEvent::Action::Checkpoint:
                break; // handled post-tick in advance_to
        }
    }

    void wire_node(const std::string& token, Node& node) {
        node.on_trace = [this, token](std::string_view dir, std::string_view tag,
                                      const std::string& summary) {
            trace_line(net_.now(), token, dir, tag, summary);
        };
        node.on_op_complete = [this, token](const LocalOp& op, std::string_view outcome,
                                            const Bytes&) {
            std::string line = token + " ";
            switch (op.kind) {
                case LocalOp::Kind::Create: line += "create " + op.path; break;
                case LocalOp::Kind::Delete: line += "delete " + op.path; break;
                case LocalOp::Kind::Rename: line += "rename " + op.path + " " + op.new_name; break;
                case LocalOp::Kind::Write: line += "write " + op.path; break;
                case LocalOp::Kind::Read: line += "read " + op.path; break;
            }
            line += " -> ";
            line += outcome;
            op_outcomes_.push_back(std::move(line));
        };
        NodeId id = sc_.id_of(token);
        Node* raw = &node;
        net_.register_node(id, [this, raw](const NetEvent& ev) {
            raw->handle(ev);
            if (opts_.audit && !aborted_) audit();
        });
    }

    void audit() {
        std::vector<std::string> violations;
        std::vector<const NodeState*> states;
        for (auto& [id, node] : nodes_) {
            checker::audit_node(node->state(), violations);
            states.push_back(&node->state());
        }
        checker::audit_sync_rounds(states, violations);
        if (!violations.empty()) {
            aborted_ = true;
            report_.violations = std::move(violations);
            report_.event_prefix_at_violation = executed_events_;
        }
    }

    void finalize() {
        report_.final_tick = net_.now();
        if (!aborted_) {
            CheckResult final_check = check("final");
            report_.converged = final_check.converged;
            report_.divergence = final_check.divergences;
        }
        for (const auto& [id, node] : nodes_) {
            const NodeState& st = node->state();
            NodeSummary summary;
            summary.token = token_of(id);
            summary.member_name = st.named() ? st.self().value : "<unnamed>";
            summary.member_set_hash = checker::member_set_hash(st);
            summary.visible_tree_hash = checker::visible_tree_hash(st);
            std::size_t files = 0;
            for_each_file(st.tree.root, [&](const FolderNode&, const FileEntry& f) {
                if (owner_visible(st, f.owner)) ++files;
            });
            summary.visible_files = files;
            report_.nodes.push_back(std::move(summary));
        }
        std::set<std::string> conflicted;
        for (const auto& [id, node] : nodes_) {
            for_each_file(node->state().tree.root, [&](const FolderNode&, const FileEntry& f) {
                if (f.conflicted) {
                    conflicted.insert(f.logical_name + " owner=" + f.owner.value);
                }
            });
        }
        report_.conflicts.assign(conflicted.begin(), conflicted.end());
    }

    std::string token_of(NodeId id) const {
        if (id >= 1 && id <= sc_.node_tokens.size()) return sc_.node_tokens[id - 1];
        return std::to_string(id);
    }

    static std::string format_event(const ScenarioEvent& ev) {
        std::string s = std::to_string(ev.at);
        switch (ev.action) {
            case ScenarioEvent::Action::Spawn: s += " spawn " + ev.node + " " + ev.arg1; break;
            case ScenarioEvent::Action::Join: s += " join " + ev.node + " " + ev.arg1; break;
            case ScenarioEvent::Action::Partition: s += " partition"; break;
            case ScenarioEvent::Action::Heal: s += " heal"; break;
            case ScenarioEvent::Action::Create: s += " create " + ev.node + " " + ev.arg1; break;
            case ScenarioEvent::Action::Delete: s += " delete " + ev.node + " " + ev.arg1; break;
            case ScenarioEvent::Action::Rename:
                s += " rename " + ev.node + " " + ev.arg1 + " " + ev.arg2;
                break;
            case ScenarioEvent::Action::Write: s += " write " + ev.node + " " + ev.arg1; break;
            case ScenarioEvent::Action::DuplicateNext:
                s += " duplicate-next-message " + ev.node;
                break;
            case ScenarioEvent::Action::Checkpoint: s += " checkpoint " + ev.arg1; break;
        }
        return s;
    }

    void trace_line(Tick t, const std::string& node, std::string_view dir, std::string_view tag,
                    const std::string& summary) {
        if (!opts_.collect_trace) return;
        trace_ += std::to_string(t);
        trace_ += ' ';
        trace_ += node;
        trace_ += ' ';
        trace_ += dir;
        trace_ += ' ';
        trace_ += tag;
        if (!summary.empty()) {
            trace_ += ' ';
            trace_ += summary;
        }
        trace_ += '\n';
    }

    Scenario sc_;
    RunOptions opts_;
    SimNet net_;
    std::map<NodeId, std::unique_ptr<Node>> nodes_;
    std::size_t cursor_ = 0;
    bool aborted_ = false;
    ConsistencyReport report_;
    std::string trace_;
    std::vector<std::string> executed_events_;
    std::vector<std::string> op_outcomes_;
};

inline RunResult run(const Scenario& scenario, const RunOptions& options) {
    Runner runner(scenario, options);
    return runner.run();
}

// Per-node canonical dumps for whole-run state comparison.
inline std::string final_state_dump(Runner& runner, const Scenario& scenario) {
    std::string dump;
    for (const auto& token : scenario.node_tokens) {
        Node* n = runner.node(token);
        if (n == nullptr) continue;
        dump += "=== " + token + " ===\n";
        dump += checker::state_dump(n->state());
    }
    return dump;
}

} // namespace edgefs::scenario
