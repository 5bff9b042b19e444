/**
 * The judging model behind /evaluate. The builtin one answers from the
 * scene record the generator stored next to each image, so its answers are
 * grounded in what was rendered, not in the prompt. Inject your own Vlm to
 * forward questions to a real endpoint instead.
 */

import type { Scene } from "./model.js";
import type { HistoryTurn } from "./protocol.js";

export interface Vlm {
  answer(scene: Scene, question: string, history: HistoryTurn[]): string | Promise<string>;
}

const COUNT_Q = /How many (\w+) are in this image/i;
const YESNO_Q =
  /Is there an? (\w+) (?:positioned )?(on the top of|on the left of|on the right of|under) an? (\w+) in th(?:e|is) image/i;
const DESCRIBE_Q = /Describe the positions of the objects/i;
const PRESENCE_Q = /Is there any (\w+) in the image\? Is there any (\w+)\?/i;

const COUNT_WORDS = [
  "no", "one", "two", "three", "four", "five",
  "six", "seven", "eight", "nine", "ten",
];

function singular(noun: string): string {
  if (noun.endsWith("ies")) return noun.slice(0, -3) + "y";
  if (/(?:[sxz]|[cs]h)es$/.test(noun)) return noun.slice(0, -2);
  if (noun.endsWith("s")) return noun.slice(0, -1);
  return noun;
}

function article(noun: string): string {
  return /^[aeiou]/i.test(noun) ? "An" : "A";
}

function lookupCount(scene: Scene, asked: string): number | null {
  const noun = asked.toLowerCase();
  for (const key of [noun, singular(noun), noun + "s", noun + "es"]) {
    if (key in scene.counts) return scene.counts[key];
  }
  return null;
}

function countSentence(noun: string, n: number): string {
  if (n > 19) return `There are too many ${noun} to count.`;
  if (n === 0) return `There are no ${noun} in the image.`;
  if (n === 1) return `There is one ${singular(noun)} in the image.`;
  const word = n <= 10 ? COUNT_WORDS[n] : String(n);
  return `There are ${word} ${noun} in the image.`;
}

export class BuiltinVlm implements Vlm {
  answer(scene: Scene, question: string, _history: HistoryTurn[]): string {
    const count = question.match(COUNT_Q);
    if (count) {
      const n = lookupCount(scene, count[1]);
      if (n === null) return `There are no ${count[1]} in the image.`;
      return countSentence(count[1], n);
    }

    const yesno = question.match(YESNO_Q);
    if (yesno) {
      const [, subject, phrase, object] = yesno;
      if (
        scene.kind === "spatial" &&
        scene.subject === subject.toLowerCase() &&
        scene.object === object.toLowerCase()
      ) {
        if (scene.realizedPhrase === phrase) {
          return `Yes, the ${subject} is ${phrase} the ${object}.`;
        }
        return `No, the ${subject} is ${scene.realizedPhrase} the ${object} instead.`;
      }
      return `No, I do not see a ${subject} ${phrase} a ${object}.`;
    }

    if (DESCRIBE_Q.test(question) || PRESENCE_Q.test(question)) {
      if (scene.kind === "spatial" && scene.subject) {
        return (
          `${article(scene.subject)} ${scene.subject} is ` +
          `${scene.realizedPhrase} ${article(scene.object!).toLowerCase()} ${scene.object}.`
        );
      }
      const parts = Object.entries(scene.counts)
        .map(([noun, n]) => `${n} ${noun}`)
        .join(" and ");
      return `The image shows ${parts || "an empty scene"}.`;
    }

    return "I cannot tell from this image.";
  }
}

/** Test helper: records every forwarded question verbatim. */
export class RecordingVlm implements Vlm {
  readonly calls: Array<{ question: string; history: HistoryTurn[] }> = [];
  constructor(private readonly reply = "recorded") {}

  answer(_scene: Scene, question: string, history: HistoryTurn[]): string {
    this.calls.push({ question, history: [...history] });
    return this.reply;
  }
}
