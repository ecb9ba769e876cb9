// Persistent stdio server around the clingo WASM build.
//
// Usage: node solver_server.js /path/to/node_modules/clingo-wasm
//
// Protocol: one JSON object per line on stdin,
//   {"id": <int>, "program": <text>, "models": <int>, "options": [<flag>...]}
// answered by one JSON object per line on stdout,
//   {"id": <int>, "result": <clingo outf=2 JSON>}   on success
//   {"id": <int>, "error": <text>}                  on wrapper failure
// Clingo-level problems (parse errors etc.) arrive inside result.Result == "ERROR".

"use strict";

const path = require("path");
const readline = require("readline");

const modulePath = process.argv[2];
if (!modulePath) {
  process.stderr.write("usage: node solver_server.js <clingo-wasm module dir>\n");
  process.exit(2);
}

// The WASM bundle logs through console.*; keep the stdout channel clean.
const rawWrite = process.stdout.write.bind(process.stdout);
for (const level of ["log", "info", "warn", "error", "debug"]) {
  console[level] = (...args) => {
    process.stderr.write(args.map(String).join(" ") + "\n");
  };
}

const clingo = require(path.resolve(modulePath));

function reply(obj) {
  rawWrite(JSON.stringify(obj) + "\n");
}

async function main() {
  const run = await clingo.init({ singleThreaded: true });
  reply({ ready: true });

  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  const queue = [];
  let busy = false;

  async function drain() {
    if (busy) return;
    busy = true;
    while (queue.length > 0) {
      const line = queue.shift();
      if (!line.trim()) continue;
      let req;
      try {
        req = JSON.parse(line);
      } catch (e) {
        reply({ id: null, error: "bad request: " + e.message });
        continue;
      }
      try {
        const result = run(req.program || "", req.models ?? 0, req.options || []);
        reply({ id: req.id, result });
      } catch (e) {
        reply({ id: req.id, error: String(e && e.message ? e.message : e) });
      }
    }
    busy = false;
  }

  rl.on("line", (line) => {
    queue.push(line);
    drain();
  });
  rl.on("close", () => process.exit(0));
}

main().catch((e) => {
  process.stderr.write("fatal: " + String(e) + "\n");
  process.exit(1);
});
