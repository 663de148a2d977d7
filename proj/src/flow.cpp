#include "flexstep/checkerflow.hpp"

#include "flexstep/model.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <string>

namespace flexstep
{
    std::string_view to_string(EndCause c) noexcept
    {
        switch (c)
        {
        case EndCause::CountLimit: return "count-limit";
        case EndCause::PrivSwitch: return "priv-switch";
        case EndCause::ProgramEnd: return "program-end";
        }
        return "?";
    }

    std::string_view to_string(FaultTarget t) noexcept
    {
        switch (t)
        {
        case FaultTarget::ScpWord: return "scp";
        case FaultTarget::EcpWord: return "ecp";
        case FaultTarget::LogAddr: return "log-addr";
        case FaultTarget::LogData: return "log-data";
        case FaultTarget::IcValue: return "ic";
        }
        return "?";
    }

    std::string_view to_string(DetectSite s) noexcept
    {
        switch (s)
        {
        case DetectSite::None: return "none";
        case DetectSite::LogCompare: return "log-compare";
        case DetectSite::EcpCompare: return "ecp-compare";
        }
        return "?";
    }

    // ---------------------------------------------------------------- MainCore

    MainCore::MainCore(std::span<const Instruction> program, std::uint64_t seg_limit, std::size_t mem_words)
        : program_(program), seg_limit_(seg_limit), machine_(program, mem_words)
    {
        if (seg_limit < 1) throw InvalidArgument("MainCore: seg_limit must be >= 1");
    }

    void MainCore::arm_fault(const FaultSpec& fault)
    {
        if (fault.bit < 0 || fault.bit > 63) throw InvalidArgument("fault bit must be in 0..63");
        fault_ = fault;
        injected_ = false;
    }

    bool MainCore::matches_fault(const ChannelWord& w) const
    {
        const FaultSpec& f = *fault_;
        if (w.segment != f.segment_index) return false;
        switch (f.target)
        {
        case FaultTarget::ScpWord: return w.kind == WordKind::Scp && w.index == f.word;
        case FaultTarget::EcpWord: return w.kind == WordKind::Ecp && w.index == f.word;
        case FaultTarget::IcValue: return w.kind == WordKind::Ic;
        case FaultTarget::LogAddr:
        case FaultTarget::LogData: return w.kind == WordKind::Entry && w.index == f.word;
        }
        return false;
    }

    void MainCore::corrupt(ChannelWord& w) const
    {
        const std::uint64_t mask = std::uint64_t{1} << fault_->bit;
        switch (fault_->target)
        {
        case FaultTarget::LogAddr: w.entry.addr ^= mask; break;
        case FaultTarget::LogData: w.entry.data ^= mask; break;
        default: w.value ^= mask; break;
        }
    }

    void MainCore::open_segment()
    {
        Segment s;
        s.index = static_cast<std::uint32_t>(segments_.size());
        s.scp = machine_.state();
        for (int i = 0; i < RegCheckpoint::kWords; ++i)
            stage({WordKind::Scp, s.index, static_cast<std::uint32_t>(i), s.scp.word(i), {}, 0});
        segments_.push_back(std::move(s));
        open_ = true;
    }

    void MainCore::close_segment(EndCause cause)
    {
        Segment& s = segments_.back();
        s.ecp = machine_.state();
        s.end_cause = cause;
        stage({WordKind::Ic, s.index, 0, s.ic, {}, 0});
        for (int i = 0; i < RegCheckpoint::kWords; ++i)
            stage({WordKind::Ecp, s.index, static_cast<std::uint32_t>(i), s.ecp.word(i), {}, 0});
        open_ = false;
    }

    bool MainCore::step(std::uint64_t cycle, std::span<FifoChannel* const> channels)
    {
        if (finished_) return false;
        if (staging_head_ < staging_.size())
        {
            for (const FifoChannel* ch : channels)
                if (ch->full())
                {
                    ++stall_cycles_;
                    return true;
                }
            ChannelWord w = staging_[staging_head_++];
            w.enqueue_cycle = cycle;
            for (std::size_t b = 0; b < channels.size(); ++b)
            {
                ChannelWord copy = w;
                if (fault_ && !injected_ && fault_->branch == static_cast<int>(b) && matches_fault(w))
                {
                    corrupt(copy);
                    injected_ = true;
                    fault_->inject_cycle = cycle;
                }
                channels[b]->try_push(copy);
            }
            ++words_sent_;
            if (staging_head_ < staging_.size()) return false;
            staging_.clear();
            staging_head_ = 0;
        }

        if (machine_.done())
        {
            if (open_)
                close_segment(EndCause::ProgramEnd);
            else
                finished_ = true;
            return false;
        }

        if (machine_.next_instruction().kind == OpKind::PrivSwitch)
        {
            // The segment ends before the kernel excursion; the switch itself
            // executes once the segment's trailing words are on their way.
            if (open_)
            {
                close_segment(EndCause::PrivSwitch);
                return false;
            }
            machine_.step();
            ++retired_;
            return false;
        }

        if (!open_) open_segment();
        const StepInfo info = machine_.step();
        ++retired_;
        ++user_retired_;
        Segment& s = segments_.back();
        ++s.ic;
        for (int i = 0; i < info.access_count; ++i)
        {
            const MemAccess& a = info.accesses[static_cast<std::size_t>(i)];
            MemLogEntry e;
            e.seq = seq_++;
            e.addr = a.addr;
            e.data = a.data;
            switch (a.kind)
            {
            case AccessKind::Load: e.kind = LogKind::Load; break;
            case AccessKind::Store: e.kind = LogKind::Store; break;
            case AccessKind::AmoLoad:
            case AccessKind::AmoStore:
                e.kind = LogKind::AmoPart;
                e.part = static_cast<std::uint8_t>(i + 1);
                e.total = static_cast<std::uint8_t>(info.access_count);
                break;
            }
            stage({WordKind::Entry, s.index, static_cast<std::uint32_t>(s.entries.size()), 0, e, 0});
            s.entries.push_back(e);
        }
        if (s.ic == seg_limit_) close_segment(EndCause::CountLimit);
        return false;
    }

    // ------------------------------------------------------------- CheckerCore

    CheckerCore::CheckerCore(std::span<const Instruction> program, std::size_t mem_words)
        : program_(program), shadow_(initial_memory(mem_words))
    {
    }

    void CheckerCore::mismatch(DetectSite site, std::uint64_t cycle)
    {
        if (segment_failed_) return;
        segment_failed_ = true;
        mismatches_.push_back({segment_, site, cycle});
    }

    ChannelWord CheckerCore::pop(FifoChannel& ch)
    {
        auto w = ch.pop();
        if (!w) throw ProtocolError("checker: pop from empty channel");
        if (w->segment != segment_)
            throw ProtocolError("checker: word of segment " + std::to_string(w->segment) + " while checking segment " +
                                std::to_string(segment_));
        ++consumed_;
        return *w;
    }

    void CheckerCore::skip_privileged()
    {
        while (state_.npc < program_.size() && program_[state_.npc].kind == OpKind::PrivSwitch)
        {
            state_.pc = state_.npc;
            ++state_.npc;
        }
    }

    void CheckerCore::finish_segment(std::uint64_t cycle)
    {
        verdicts_.push_back({segment_, !segment_failed_, cycle});
        new_verdict_ = !segment_failed_;
        ++segment_;
        segment_failed_ = false;
        phase_ = Phase::ExpectScp;
        count_ = 0;
        ic_.reset();
        amo_first_.reset();
    }

    void CheckerCore::step(std::uint64_t cycle, FifoChannel& ch, bool active)
    {
        if (!active) return;
        bool popped = false;
        bool executed = false;
        constexpr int kWords = RegCheckpoint::kWords;

        while (true)
        {
            switch (phase_)
            {
            case Phase::ExpectScp: {
                if (popped || ch.empty()) return;
                const ChannelWord w = pop(ch);
                popped = true;
                if (w.kind != WordKind::Scp || w.index != static_cast<std::uint32_t>(scp_words_))
                    throw ProtocolError("checker: expected SCP word " + std::to_string(scp_words_) + ", got " +
                                        std::string(to_string(w.kind)));
                incoming_.set_word(scp_words_++, w.value);
                if (scp_words_ < kWords) return;
                scp_words_ = 0;
                // The new segment must start where the checker's own execution left off.
                skip_privileged();
                if (!(incoming_ == state_)) mismatch(DetectSite::EcpCompare, cycle);
                state_ = incoming_; // C.apply, then C.jal to incoming_.npc
                applied_ = incoming_;
                phase_ = Phase::Replay;
                return;
            }
            case Phase::Replay: {
                if (ic_ && count_ >= *ic_)
                {
                    phase_ = Phase::ExpectEcp;
                    continue;
                }
                if (!ic_)
                {
                    const ChannelWord* f = ch.front();
                    if (!f) return;
                    if (f->kind == WordKind::Ic)
                    {
                        if (popped) return;
                        ic_ = pop(ch).value;
                        popped = true;
                        if (count_ > *ic_)
                        {
                            mismatch(DetectSite::EcpCompare, cycle);
                            phase_ = Phase::ExpectEcp;
                        }
                        continue;
                    }
                    if (f->kind != WordKind::Entry)
                        throw ProtocolError("checker: expected log entry or IC, got " + std::string(to_string(f->kind)));
                }
                if (executed) return;
                bool progressed = false;
                {
                    // Replay one instruction.
                    const auto at = state_.npc;
                    if (at >= program_.size() || program_[at].kind == OpKind::PrivSwitch)
                    {
                        // Replay ran past the end of what the main core executed.
                        mismatch(DetectSite::EcpCompare, cycle);
                        phase_ = Phase::ExpectEcp;
                        continue;
                    }
                    const Instruction& ins = program_[at];
                    auto& r = state_.regs;
                    std::uint64_t next = at + 1;
                    const bool needs_entry =
                        ins.kind == OpKind::Load || ins.kind == OpKind::Store || ins.kind == OpKind::Amo;
                    std::optional<MemLogEntry> entry;
                    if (needs_entry)
                    {
                        if (popped) return;
                        const ChannelWord* f = ch.front();
                        if (!f) return;
                        if (f->kind != WordKind::Entry)
                        {
                            if (!ic_) throw ProtocolError("checker: missing log entry");
                            mismatch(DetectSite::EcpCompare, cycle);
                            phase_ = Phase::ExpectEcp;
                            continue;
                        }
                        entry = pop(ch).entry;
                        popped = true;
                    }
                    const std::uint64_t addr = r[ins.rs1] + static_cast<std::uint64_t>(ins.imm);
                    const bool in_range = addr < shadow_.size();
                    switch (ins.kind)
                    {
                    case OpKind::Alu:
                        if (ins.rd != 0) r[ins.rd] = alu_eval(ins.alu, r[ins.rs1], r[ins.rs2], ins.imm);
                        break;
                    case OpKind::Branch:
                        if (r[ins.rs1] < r[ins.rs2]) next = at + 1 + static_cast<std::uint64_t>(ins.imm);
                        break;
                    case OpKind::Load:
                        if (entry->kind != LogKind::Load) throw ProtocolError("checker: expected load entry");
                        if (!in_range || entry->addr != addr || shadow_[addr] != entry->data)
                            mismatch(DetectSite::LogCompare, cycle);
                        if (ins.rd != 0) r[ins.rd] = entry->data;
                        break;
                    case OpKind::Store:
                        if (entry->kind != LogKind::Store) throw ProtocolError("checker: expected store entry");
                        if (!in_range || entry->addr != addr || entry->data != r[ins.rs2])
                            mismatch(DetectSite::LogCompare, cycle);
                        if (in_range) shadow_[addr] = r[ins.rs2];
                        break;
                    case OpKind::Amo:
                        if (entry->kind != LogKind::AmoPart || entry->total != 2)
                            throw ProtocolError("checker: expected atomic entry");
                        if (!amo_first_)
                        {
                            if (entry->part != 1) throw ProtocolError("checker: atomic parts out of order");
                            amo_first_ = entry;
                            return; // second part arrives next cycle
                        }
                        if (entry->part != 2) throw ProtocolError("checker: atomic parts out of order");
                        {
                            const MemLogEntry first = *amo_first_;
                            amo_first_.reset();
                            const std::uint64_t old = in_range ? shadow_[addr] : 0;
                            const std::uint64_t updated = old + r[ins.rs2];
                            if (!in_range || first.addr != addr || first.data != old || entry->addr != addr ||
                                entry->data != updated)
                                mismatch(DetectSite::LogCompare, cycle);
                            if (in_range) shadow_[addr] = updated;
                            if (ins.rd != 0) r[ins.rd] = first.data;
                        }
                        break;
                    case OpKind::PrivSwitch: break;
                    }
                    state_.pc = at;
                    state_.npc = next;
                    ++count_;
                    ++retired_;
                    progressed = true;
                }
                executed = progressed;
                continue;
            }
            case Phase::ExpectEcp: {
                if (popped || ch.empty()) return;
                const ChannelWord* f = ch.front();
                if (f->kind != WordKind::Ecp)
                {
                    // Leftover entries/IC of a segment abandoned after a length mismatch.
                    if (!segment_failed_) throw ProtocolError("checker: expected ECP word");
                    pop(ch);
                    popped = true;
                    return;
                }
                const ChannelWord w = pop(ch);
                popped = true;
                if (w.index != static_cast<std::uint32_t>(ecp_words_))
                    throw ProtocolError("checker: ECP words out of order");
                incoming_.set_word(ecp_words_++, w.value);
                if (ecp_words_ < kWords) return;
                ecp_words_ = 0;
                if (!(incoming_ == state_)) mismatch(DetectSite::EcpCompare, cycle);
                finish_segment(cycle);
                return;
            }
            }
        }
    }

    // ----------------------------------------------------------------- FlowSim

    FlowSim::FlowSim(std::span<const Instruction> program, const FlowConfig& cfg, std::optional<FaultSpec> fault)
        : cfg_(cfg), platform_(1 + cfg.checkers), main_(program, cfg.seg_limit, cfg.mem_words)
    {
        if (cfg.checkers < 1 || cfg.checkers > 2) throw InvalidArgument("FlowSim: one or two checkers supported");
        std::set<int> checker_ids;
        std::vector<int> checker_list;
        for (int b = 0; b < cfg.checkers; ++b)
        {
            checker_ids.insert(checker_core_id(b));
            checker_list.push_back(checker_core_id(b));
            checkers_.emplace_back(program, cfg.mem_words);
            channels_.emplace_back(cfg.capacity);
        }
        for (auto& ch : channels_) channel_ptrs_.push_back(&ch);

        // Context-switch sequence for a newly released verification task,
        // followed by the checker thread's entry.
        isa_step(platform_, isa::Configure{{0}, checker_ids});
        isa_step(platform_, isa::Associate{0, checker_list});
        isa_step(platform_, isa::Check{0, true});
        for (int id : checker_list)
        {
            isa_step(platform_, isa::CheckState{id, true});
            isa_step(platform_, isa::Record{id, RegCheckpoint{}});
        }

        if (fault)
        {
            if (fault->branch < 0 || fault->branch >= cfg.checkers) throw InvalidArgument("fault branch out of range");
            main_.arm_fault(*fault);
        }
        max_cycles_ = cfg.max_cycles ? cfg.max_cycles
                                     : cfg.checker_lag + 8 * (program.size() + 64) + 4 * cfg.capacity + 100000;
    }

    void FlowSim::step()
    {
        if (platform_.core(0).checking == Checking::Enabled)
            main_.step(cycle_, channel_ptrs_);
        else
            main_.step(cycle_, {});

        for (int b = 0; b < cfg_.checkers; ++b)
        {
            const int id = checker_core_id(b);
            const bool active = cycle_ >= cfg_.checker_lag && platform_.core(id).checking == Checking::Busy;
            auto& chk = checkers_[static_cast<std::size_t>(b)];
            chk.step(cycle_, channels_[static_cast<std::size_t>(b)], active);
            if (auto scp = chk.take_applied())
            {
                platform_.apply(id, *scp);
                platform_.jal(id);
            }
            if (auto v = chk.take_verdict()) platform_.report_verdict(id, *v);
        }

        if (!recorded_injection_ && main_.fault_injected())
        {
            const auto& chk = checkers_[static_cast<std::size_t>(main_.fault()->branch)];
            const std::uint64_t produced = main_.retired() + main_.words_sent();
            const std::uint64_t consumed = chk.retired() + chk.words_consumed();
            backlog_at_injection_ = produced > consumed ? produced - consumed : 0;
            recorded_injection_ = true;
        }
        ++cycle_;
    }

    bool FlowSim::done() const
    {
        if (!main_.finished()) return false;
        for (std::size_t b = 0; b < checkers_.size(); ++b)
            if (!channels_[b].empty() || !checkers_[b].between_segments()) return false;
        return true;
    }

    void FlowSim::run()
    {
        while (!done() && cycle_ < max_cycles_)
        {
            step();
            if (cfg_.stop_at_detection && main_.fault_injected() &&
                !checkers_[static_cast<std::size_t>(main_.fault()->branch)].mismatches().empty())
                break;
        }
    }

    // --------------------------------------------------------- free functions

    std::vector<Segment> segment_program(std::span<const Instruction> program, std::uint64_t seg_limit,
                                         std::size_t mem_words)
    {
        MainCore core(program, seg_limit, mem_words);
        for (std::uint64_t c = 0; !core.finished(); ++c) core.step(c, {});
        return core.segments();
    }

    MainRun run_main(std::span<const Instruction> program, std::uint64_t seg_limit, FifoChannel& channel,
                     std::size_t mem_words)
    {
        MainCore core(program, seg_limit, mem_words);
        FifoChannel* const chans[] = {&channel};
        MainRun out;
        std::uint64_t c = 0;
        for (; !core.finished(); ++c)
            if (core.step(c, chans)) break;
        out.completed = core.finished();
        out.cycles = c;
        out.segments = core.segments();
        return out;
    }

    CheckerRun run_checker(std::span<const Instruction> program, FifoChannel& channel, const CoreState& state,
                           std::size_t mem_words)
    {
        if (state.attr != CoreAttr::Checker) throw IllegalInstruction("run_checker: core is not a checker");
        CheckerRun out;
        if (state.checking != Checking::Busy) return out;
        CheckerCore chk(program, mem_words);
        for (std::uint64_t c = 0;; ++c)
        {
            const auto before = std::make_pair(chk.retired(), chk.words_consumed());
            chk.step(c, channel, true);
            if (std::make_pair(chk.retired(), chk.words_consumed()) == before) break;
        }
        out.verdicts = chk.verdicts();
        out.mismatches = chk.mismatches();
        return out;
    }

    void validate_fault(const FaultSpec& f, const std::vector<Segment>& segments, int checkers)
    {
        if (f.segment_index >= segments.size())
            throw InvalidArgument("fault references segment " + std::to_string(f.segment_index) + " but only " +
                                  std::to_string(segments.size()) + " exist");
        if (f.bit < 0 || f.bit > 63) throw InvalidArgument("fault bit must be in 0..63");
        if (f.branch < 0 || f.branch >= checkers) throw InvalidArgument("fault branch out of range");
        const Segment& s = segments[f.segment_index];
        switch (f.target)
        {
        case FaultTarget::ScpWord:
        case FaultTarget::EcpWord:
            if (f.word >= static_cast<std::uint32_t>(RegCheckpoint::kWords))
                throw InvalidArgument("fault checkpoint word out of range");
            break;
        case FaultTarget::LogAddr:
        case FaultTarget::LogData:
            if (f.word >= s.entries.size())
                throw InvalidArgument("fault references entry " + std::to_string(f.word) + " of segment " +
                                      std::to_string(f.segment_index) + ", which has " +
                                      std::to_string(s.entries.size()));
            break;
        case FaultTarget::IcValue: break;
        }
    }

    std::vector<DetectionRecord> inject_and_measure(std::span<const Instruction> program, const InjectConfig& cfg,
                                                    std::span<const FaultSpec> faults)
    {
        const auto segments = segment_program(program, cfg.seg_limit, cfg.mem_words);
        for (const auto& f : faults) validate_fault(f, segments, cfg.checkers);

        FlowConfig fc;
        fc.seg_limit = cfg.seg_limit;
        fc.capacity = cfg.capacity;
        fc.checker_lag = cfg.checker_lag;
        fc.checkers = cfg.checkers;
        fc.mem_words = cfg.mem_words;
        fc.stop_at_detection = true;

        std::vector<DetectionRecord> out;
        out.reserve(faults.size());
        for (const auto& f : faults)
        {
            FlowSim sim(program, fc, f);
            sim.run();
            DetectionRecord rec;
            rec.fault = sim.main().fault().value_or(f);
            const Segment& s = segments[f.segment_index];
            const std::uint64_t replay = s.ic + s.entries.size() + 2 * RegCheckpoint::kWords + 1;
            rec.latency_bound = cfg.checker_lag + sim.backlog_at_injection() + replay;
            if (sim.main().fault_injected())
            {
                for (const auto& mm : sim.checker(f.branch).mismatches())
                {
                    if (mm.cycle < rec.fault.inject_cycle) continue;
                    rec.detected = true;
                    rec.detect_cycle = mm.cycle;
                    rec.latency = mm.cycle - rec.fault.inject_cycle;
                    rec.detect_site = mm.site;
                    break;
                }
            }
            out.push_back(rec);
        }
        return out;
    }

    FaultSpec random_fault(Rng& rng, const std::vector<Segment>& segments, int checkers)
    {
        if (segments.empty()) throw InvalidArgument("random_fault: program forwards no segments");
        constexpr std::uint64_t kCp = RegCheckpoint::kWords;
        std::uint64_t total = 0;
        for (const auto& s : segments) total += 2 * kCp + 1 + 2 * s.entries.size();
        std::uint64_t pick = rng.below(total);
        FaultSpec f;
        f.bit = static_cast<int>(rng.below(64));
        f.branch = static_cast<int>(rng.below(static_cast<std::uint64_t>(checkers)));
        for (const auto& s : segments)
        {
            const std::uint64_t n = 2 * kCp + 1 + 2 * s.entries.size();
            if (pick >= n)
            {
                pick -= n;
                continue;
            }
            f.segment_index = s.index;
            if (pick < kCp)
            {
                f.target = FaultTarget::ScpWord;
                f.word = static_cast<std::uint32_t>(pick);
            }
            else if (pick < 2 * kCp)
            {
                f.target = FaultTarget::EcpWord;
                f.word = static_cast<std::uint32_t>(pick - kCp);
            }
            else if (pick == 2 * kCp)
                f.target = FaultTarget::IcValue;
            else
            {
                const std::uint64_t e = pick - 2 * kCp - 1;
                f.target = (e % 2 == 0) ? FaultTarget::LogAddr : FaultTarget::LogData;
                f.word = static_cast<std::uint32_t>(e / 2);
            }
            break;
        }
        return f;
    }

    void write_detection_csv_header(std::ostream& os)
    {
        os << "fault_id,target,segment,bit,inject_cycle,detect_cycle,latency_cycles,detect_site,detected\n";
    }

    void write_detection_csv_row(std::ostream& os, std::uint64_t fault_id, const DetectionRecord& r)
    {
        os << fault_id << ',' << to_string(r.fault.target) << ',' << r.fault.segment_index << ',' << r.fault.bit << ','
           << r.fault.inject_cycle << ',' << r.detect_cycle << ',' << r.latency << ',' << to_string(r.detect_site)
           << ',' << (r.detected ? 1 : 0) << '\n';
    }
} // namespace flexstep
