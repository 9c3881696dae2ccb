/** Scripted browser session against the real Python service. */
import { strict as assert } from "node:assert";
import { spawn } from "node:child_process";
import { readFileSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { after, before, test } from "node:test";
import { fileURLToPath } from "node:url";
import { JSDOM } from "jsdom";
import { Api } from "../src/api.js";
import { initApp } from "../src/main.js";
const here = path.dirname(fileURLToPath(import.meta.url));
const repoRoot = path.resolve(here, "../../..");
const html = readFileSync(path.join(repoRoot, "frontend/index.html"), "utf-8");
let server;
let base;
function lcg(seed) {
    let s = seed >>> 0;
    return () => {
        s = (s * 1664525 + 1013904223) >>> 0;
        return s / 2 ** 32;
    };
}
function makePool(n = 60, dim = 32, seed = 7) {
    const rand = lcg(seed);
    const ids = [];
    const embeddings = [];
    for (let i = 0; i < n; i++) {
        ids.push(`L${String(i).padStart(3, "0")}`);
        const bytes = new Uint8Array(dim / 8);
        for (let b = 0; b < bytes.length; b++) {
            let v = 0;
            for (let bit = 0; bit < 8; bit++) {
                if (rand() < 0.3)
                    v |= 1 << (7 - bit);
            }
            bytes[b] = v;
        }
        embeddings.push(Buffer.from(bytes).toString("hex"));
    }
    return { protein_id: "E2E", kind: "binary", dim, ids, embeddings };
}
/** Deterministic fake lab: PIC from the ligand index. */
function labPic(lid) {
    const i = Number(lid.slice(1));
    return 5 + ((i * 37) % 40) / 10; // 5.0 .. 8.9
}
before(async () => {
    const port = 18000 + Math.floor(Math.random() * 2000);
    base = `http://127.0.0.1:${port}`;
    const dataDir = mkdtempSync(path.join(tmpdir(), "campaigns-"));
    server = spawn("python3", [
        "-m", "spade.cli", "serve", "--port", String(port), "--data-dir", dataDir,
        "--assets", path.join(repoRoot, "frontend/dist"),
    ], {
        cwd: repoRoot,
        env: { ...process.env, PYTHONPATH: path.join(repoRoot, "src") },
        stdio: ["ignore", "pipe", "pipe"],
    });
    const deadline = Date.now() + 20000;
    for (;;) {
        try {
            const resp = await fetch(`${base}/campaigns`);
            if (resp.ok)
                break;
        }
        catch {
            if (Date.now() > deadline)
                throw new Error("service did not start");
            await new Promise((r) => setTimeout(r, 200));
        }
    }
});
after(() => {
    server.kill("SIGTERM");
});
function startApp() {
    const dom = new JSDOM(html, { url: base });
    const doc = dom.window.document;
    const api = new Api(base, fetch.bind(globalThis));
    const app = initApp(doc, api);
    return { app, doc, api };
}
function typeInto(doc, dom, lid, value) {
    const input = doc.querySelector(`input[data-ligand="${lid}"]`);
    assert.ok(input, `input for ${lid}`);
    input.value = value;
    const event = doc.createEvent("Event");
    event.initEvent("input", true, true);
    input.dispatchEvent(event);
}
test("four full DMTA cycles through the dashboard", async () => {
    const { app, doc, api } = startApp();
    // create via the form
    doc.getElementById("pool-json").value =
        JSON.stringify(makePool());
    doc.getElementById("endpoint-target").value = "8.5";
    doc.getElementById("seed").value = "11";
    await app.createFromForm();
    const cid = app.view.campaignId;
    assert.ok(cid, "campaign created");
    for (let cycle = 1; cycle <= 4; cycle++) {
        await app.requestSuggestion();
        const state1 = await api.getState(cid);
        const batch = state1.pending_batch;
        assert.equal(batch.length, 10, `cycle ${cycle} batch size`);
        // second suggest click without new results: identical batch
        await app.requestSuggestion();
        const state2 = await api.getState(cid);
        assert.deepEqual(state2.pending_batch, batch, `cycle ${cycle}: repeated suggest returns the identical batch`);
        for (const lid of batch) {
            typeInto(doc, doc, lid, String(labPic(lid)));
        }
        await app.submitEntered();
        const after = await api.getState(cid);
        assert.equal(after.seen_count, cycle * 10);
        assert.equal(after.pending_batch, null);
        assert.equal(after.cycles.length, cycle);
        assert.equal(after.cycles[cycle - 1].observations.length, 10);
    }
    // final top-k table in the DOM equals the service's get_state output
    const final = await api.getState(cid);
    const rows = Array.from(doc.querySelectorAll("#topk .top-row")).map((row) => {
        const cells = row.querySelectorAll("td");
        return { ligand_id: cells[1].textContent, pic: Number(cells[2].textContent) };
    });
    assert.equal(rows.length, final.top.length);
    rows.forEach((row, i) => {
        assert.equal(row.ligand_id, final.top[i].ligand_id);
        assert.ok(Math.abs(row.pic - final.top[i].pic) < 1e-4);
    });
    assert.equal(final.seen_count, 40);
});
test("partial submission needs explicit confirmation; values survive", async () => {
    const { app, doc, api } = startApp();
    doc.getElementById("pool-json").value =
        JSON.stringify(makePool(40, 32, 9));
    await app.createFromForm();
    const cid = app.view.campaignId;
    await app.requestSuggestion();
    const batch = (await api.getState(cid)).pending_batch;
    typeInto(doc, doc, batch[0], "7.7");
    await app.submitEntered(); // partial without confirmation -> blocked
    assert.match(app.view.message, /confirm partial/);
    assert.equal((await api.getState(cid)).seen_count, 0);
    doc.getElementById("confirm-partial").checked = true;
    await app.submitEntered();
    assert.equal((await api.getState(cid)).seen_count, 1);
    // a plain suggest now surfaces the service's pending-batch conflict
    await app.requestSuggestion();
    assert.match(app.view.message, /pending batch conflict/i);
    // typed-but-unsubmitted value for another ligand survives a refresh
    typeInto(doc, doc, batch[1], "6.6");
    await app.refresh();
    const input = doc.querySelector(`input[data-ligand="${batch[1]}"]`);
    assert.equal(input.value, "6.6");
});
test("client-side finiteness validation blocks bad input", async () => {
    const { app, doc, api } = startApp();
    doc.getElementById("pool-json").value =
        JSON.stringify(makePool(30, 32, 3));
    await app.createFromForm();
    const cid = app.view.campaignId;
    await app.requestSuggestion();
    const batch = (await api.getState(cid)).pending_batch;
    typeInto(doc, doc, batch[0], "not-a-number");
    await app.submitEntered();
    assert.match(app.view.message, /not a finite number/);
    assert.equal((await api.getState(cid)).seen_count, 0);
});
test("button wiring drives the same handlers", async () => {
    const { app, doc } = startApp();
    doc.getElementById("pool-json").value =
        JSON.stringify(makePool(30, 32, 5));
    doc.getElementById("create-btn").click();
    await new Promise((r) => setTimeout(r, 500));
    assert.ok(app.view.campaignId, "create button created a campaign");
    doc.getElementById("suggest-btn").click();
    await new Promise((r) => setTimeout(r, 700));
    const empty = doc.getElementById("batch-empty");
    assert.equal(empty, null, "suggest button rendered a batch form");
    assert.equal(doc.querySelectorAll("#batch .pic-input").length, 10);
});
test("unreachable server shows error state and keeps typed values", async () => {
    const { app, doc, api } = startApp();
    doc.getElementById("pool-json").value =
        JSON.stringify(makePool(30, 32, 13));
    await app.createFromForm();
    await app.requestSuggestion();
    const cid = app.view.campaignId;
    const batch = (await api.getState(cid)).pending_batch;
    typeInto(doc, doc, batch[0], "8.1");
    const dead = new Api("http://127.0.0.1:1", fetch.bind(globalThis));
    const deadApp = initApp(doc, dead);
    deadApp.view.campaignId = cid;
    deadApp.view.entered.set(batch[0], "8.1");
    const result = await deadApp.refresh();
    assert.equal(result, null);
    assert.match(deadApp.view.message, /server unreachable/);
    assert.equal(deadApp.view.entered.get(batch[0]), "8.1");
    // previously rendered batch table is still on screen
    const input = doc.querySelector(`input[data-ligand="${batch[0]}"]`);
    assert.ok(input);
    assert.equal(input.value, "8.1");
});
