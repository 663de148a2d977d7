#pragma once

#include "flexstep/channel.hpp"
#include "flexstep/isa.hpp"
#include "flexstep/machine.hpp"
#include "flexstep/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace flexstep
{
    inline constexpr std::uint64_t kDefaultSegLimit = 5000;
    inline constexpr std::size_t kDefaultChannelCapacity = 1024;

    // Malformed channel traffic (words out of protocol order). Distinct from a
    // detected error, which is reported as a DetectionRecord.
    struct ProtocolError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    enum class EndCause : std::uint8_t
    {
        CountLimit,
        PrivSwitch,
        ProgramEnd,
    };

    std::string_view to_string(EndCause c) noexcept;

    struct Segment
    {
        std::uint32_t index = 0;
        RegCheckpoint scp;
        std::vector<MemLogEntry> entries;
        std::uint64_t ic = 0;
        RegCheckpoint ecp;
        EndCause end_cause = EndCause::ProgramEnd;
    };

    enum class FaultTarget : std::uint8_t
    {
        ScpWord,
        EcpWord,
        LogAddr,
        LogData,
        IcValue,
    };

    std::string_view to_string(FaultTarget t) noexcept;

    // One flipped bit in one forwarded word. `word` selects the checkpoint word
    // (0 = pc, 1 = npc, 2.. = registers) or the entry ordinal within the
    // segment; it is ignored for IcValue. `branch` selects the checker channel
    // in triple mode.
    struct FaultSpec
    {
        FaultTarget target = FaultTarget::EcpWord;
        std::uint32_t segment_index = 0;
        std::uint32_t word = 0;
        int bit = 0;
        int branch = 0;
        std::uint64_t inject_cycle = 0; // filled in when the corrupted word is enqueued
    };

    enum class DetectSite : std::uint8_t
    {
        None,
        LogCompare, // memory-log entry compared at commit
        EcpCompare, // checkpoint compare (ECP, and SCP continuity) or replay-length mismatch
    };

    std::string_view to_string(DetectSite s) noexcept;

    struct DetectionRecord
    {
        FaultSpec fault;
        bool detected = false;
        std::uint64_t detect_cycle = 0;
        std::uint64_t latency = 0;
        DetectSite detect_site = DetectSite::None;
        // Cycle bound: checker_lag + backlog at injection + one full segment replay.
        std::uint64_t latency_bound = 0;
    };

    struct Mismatch
    {
        std::uint32_t segment = 0;
        DetectSite site = DetectSite::None;
        std::uint64_t cycle = 0;
    };

    struct SegmentVerdict
    {
        std::uint32_t segment = 0;
        bool pass = true;
        std::uint64_t cycle = 0;
    };

    // Producer side: executes the program, cuts checking segments at privilege
    // switches and at the user instruction-count limit, and forwards
    // SCP, log entries, IC and ECP (in that order) to every attached channel.
    // One instruction and one channel word per cycle; while undelivered words
    // are pending the core does not execute, and a pending word that finds a
    // channel full stalls the core (backpressure).
    class MainCore
    {
    public:
        MainCore(std::span<const Instruction> program, std::uint64_t seg_limit,
                 std::size_t mem_words = kDefaultMemWords);

        void arm_fault(const FaultSpec& fault);

        // Returns true if the core stalled on a full channel this cycle.
        bool step(std::uint64_t cycle, std::span<FifoChannel* const> channels);

        bool finished() const noexcept { return finished_; }
        const std::vector<Segment>& segments() const noexcept { return segments_; }
        const RegCheckpoint& state() const noexcept { return machine_.state(); }
        std::uint64_t retired() const noexcept { return retired_; }
        std::uint64_t user_retired() const noexcept { return user_retired_; }
        std::uint64_t words_sent() const noexcept { return words_sent_; }
        std::uint64_t stall_cycles() const noexcept { return stall_cycles_; }
        std::size_t pending_words() const noexcept { return staging_.size() - staging_head_; }
        const std::optional<FaultSpec>& fault() const noexcept { return fault_; }
        // Set when the armed fault's word is enqueued.
        bool fault_injected() const noexcept { return injected_; }

    private:
        void open_segment();
        void close_segment(EndCause cause);
        void stage(ChannelWord w) { staging_.push_back(w); }
        bool matches_fault(const ChannelWord& w) const;
        void corrupt(ChannelWord& w) const;

        std::span<const Instruction> program_;
        std::uint64_t seg_limit_;
        Machine machine_;
        std::vector<Segment> segments_;
        std::vector<ChannelWord> staging_;
        std::size_t staging_head_ = 0;
        bool open_ = false;
        bool finished_ = false;
        std::uint64_t seq_ = 0;
        std::uint64_t retired_ = 0;
        std::uint64_t user_retired_ = 0;
        std::uint64_t words_sent_ = 0;
        std::uint64_t stall_cycles_ = 0;
        std::optional<FaultSpec> fault_;
        bool injected_ = false;
    };

    // Consumer side: the checker thread. For each segment it collects the SCP,
    // checks it against its own continuation state, installs it (C.apply) and
    // jumps to its npc (C.jal), replays user instructions with loads served from
    // the log, compares every log entry at commit against its own execution,
    // and compares its final state against the ECP. One instruction and one
    // channel word per cycle.
    class CheckerCore
    {
    public:
        CheckerCore(std::span<const Instruction> program, std::size_t mem_words = kDefaultMemWords);

        // `active` is false while the checker is lagging or idle.
        void step(std::uint64_t cycle, FifoChannel& channel, bool active);

        bool between_segments() const noexcept { return phase_ == Phase::ExpectScp && scp_words_ == 0; }
        const std::vector<SegmentVerdict>& verdicts() const noexcept { return verdicts_; }
        const std::vector<Mismatch>& mismatches() const noexcept { return mismatches_; }
        const RegCheckpoint& state() const noexcept { return state_; }
        std::uint64_t retired() const noexcept { return retired_; }
        std::uint64_t words_consumed() const noexcept { return consumed_; }
        // Set at each SCP/ECP event so the owner can mirror C.apply / C.result.
        std::optional<RegCheckpoint> take_applied() { return std::exchange(applied_, std::nullopt); }
        std::optional<bool> take_verdict() { return std::exchange(new_verdict_, std::nullopt); }

    private:
        enum class Phase { ExpectScp, Replay, ExpectEcp };

        void mismatch(DetectSite site, std::uint64_t cycle);
        ChannelWord pop(FifoChannel& ch);
        void finish_segment(std::uint64_t cycle);
        void skip_privileged();

        std::span<const Instruction> program_;
        std::vector<std::uint64_t> shadow_;
        RegCheckpoint state_;
        Phase phase_ = Phase::ExpectScp;
        std::uint32_t segment_ = 0;
        RegCheckpoint incoming_;
        int scp_words_ = 0;
        int ecp_words_ = 0;
        std::uint64_t count_ = 0;
        std::optional<std::uint64_t> ic_;
        std::optional<MemLogEntry> amo_first_;
        bool segment_failed_ = false;
        std::uint64_t retired_ = 0;
        std::uint64_t consumed_ = 0;
        std::vector<SegmentVerdict> verdicts_;
        std::vector<Mismatch> mismatches_;
        std::optional<RegCheckpoint> applied_;
        std::optional<bool> new_verdict_;
    };

    struct FlowConfig
    {
        std::uint64_t seg_limit = kDefaultSegLimit;
        std::size_t capacity = kDefaultChannelCapacity;
        std::uint64_t checker_lag = 0;
        int checkers = 1; // 1 = dual mode, 2 = triple mode
        std::size_t mem_words = kDefaultMemWords;
        bool stop_at_detection = false;
        std::uint64_t max_cycles = 0; // 0 = derived from program length
    };

    // Cycle-level coupled simulation of one main core (core 0) and one or two
    // checker cores (cores 1, 2) wired through the core-management ISA.
    class FlowSim
    {
    public:
        FlowSim(std::span<const Instruction> program, const FlowConfig& cfg, std::optional<FaultSpec> fault = {});

        void step();
        // Runs until both sides drain (or the first detection when configured).
        void run();
        bool done() const;

        std::uint64_t cycle() const noexcept { return cycle_; }
        Platform& platform() noexcept { return platform_; }
        const MainCore& main() const noexcept { return main_; }
        const CheckerCore& checker(int branch) const { return checkers_.at(static_cast<std::size_t>(branch)); }
        const FifoChannel& channel(int branch) const { return channels_.at(static_cast<std::size_t>(branch)); }
        int checker_core_id(int branch) const noexcept { return 1 + branch; }

        // Backlog (checker work outstanding, in cycle units) when the fault word was enqueued.
        std::uint64_t backlog_at_injection() const noexcept { return backlog_at_injection_; }

    private:
        FlowConfig cfg_;
        Platform platform_;
        MainCore main_;
        std::vector<CheckerCore> checkers_;
        std::vector<FifoChannel> channels_;
        std::vector<FifoChannel*> channel_ptrs_;
        std::uint64_t cycle_ = 0;
        std::uint64_t max_cycles_ = 0;
        std::uint64_t backlog_at_injection_ = 0;
        bool recorded_injection_ = false;
    };

    // Segmentation of a program without timing: what the main core forwards.
    std::vector<Segment> segment_program(std::span<const Instruction> program, std::uint64_t seg_limit,
                                         std::size_t mem_words = kDefaultMemWords);

    // Runs the main core until the program ends or it stalls on a full channel.
    struct MainRun
    {
        std::vector<Segment> segments;
        bool completed = false;
        std::uint64_t cycles = 0;
    };
    MainRun run_main(std::span<const Instruction> program, std::uint64_t seg_limit, FifoChannel& channel,
                     std::size_t mem_words = kDefaultMemWords);

    // Drains whatever the channel currently holds through a checker core.
    struct CheckerRun
    {
        std::vector<SegmentVerdict> verdicts;
        std::vector<Mismatch> mismatches;
    };
    CheckerRun run_checker(std::span<const Instruction> program, FifoChannel& channel, const CoreState& state,
                           std::size_t mem_words = kDefaultMemWords);

    struct InjectConfig
    {
        std::uint64_t seg_limit = kDefaultSegLimit;
        std::size_t capacity = kDefaultChannelCapacity;
        std::uint64_t checker_lag = 0;
        int checkers = 1;
        std::size_t mem_words = kDefaultMemWords;
    };

    // Checks that a fault addresses an existing word of the given segmentation.
    void validate_fault(const FaultSpec& f, const std::vector<Segment>& segments, int checkers);

    // One independent coupled run per fault; returns one record per fault.
    std::vector<DetectionRecord> inject_and_measure(std::span<const Instruction> program, const InjectConfig& cfg,
                                                    std::span<const FaultSpec> faults);

    // Uniformly random fault over the forwarded words of a segmentation.
    FaultSpec random_fault(Rng& rng, const std::vector<Segment>& segments, int checkers = 1);

    // fault_id,target,segment,bit,inject_cycle,detect_cycle,latency_cycles,detect_site,detected
    void write_detection_csv_header(std::ostream& os);
    void write_detection_csv_row(std::ostream& os, std::uint64_t fault_id, const DetectionRecord& r);
} // namespace flexstep
