import { strict as assert } from "node:assert";
import { test } from "node:test";
import { clearEntered, collectObservations, newViewState, rememberInput, } from "../src/state.js";
test("remembers and clears typed values", () => {
    const view = newViewState();
    rememberInput(view, "L1", "7.5");
    rememberInput(view, "L2", "8");
    assert.equal(view.entered.get("L1"), "7.5");
    rememberInput(view, "L1", "");
    assert.equal(view.entered.has("L1"), false);
    clearEntered(view, ["L2"]);
    assert.equal(view.entered.size, 0);
});
test("collects only finite numbers and flags the rest", () => {
    const view = newViewState();
    rememberInput(view, "L1", "7.25");
    rememberInput(view, "L2", "abc");
    rememberInput(view, "L3", "Infinity");
    rememberInput(view, "L4", "  ");
    const { observations, invalid } = collectObservations(view, [
        "L1",
        "L2",
        "L3",
        "L4",
        "L5",
    ]);
    assert.deepEqual(observations, [{ ligand_id: "L1", pic: 7.25 }]);
    assert.deepEqual(invalid.sort(), ["L2", "L3"]);
});
test("ignores values for ligands outside the batch", () => {
    const view = newViewState();
    rememberInput(view, "L9", "9.0");
    const { observations, invalid } = collectObservations(view, ["L1"]);
    assert.equal(observations.length, 0);
    assert.equal(invalid.length, 0);
});
