// SPDX-License-Identifier: Apache-2.0
#include "trajkit/prompts.hpp"

#include <array>

namespace trajkit {

std::string render_history(std::span<const HistoryEntry> entries, int first_step) {
  if (entries.empty()) return std::string(kNoHistory);
  std::string out;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (i) out += '\n';
    out += "Step " + std::to_string(first_step + static_cast<int>(i)) + " — Thought: " +
           entries[i].thought + " Action: " + render_action(entries[i].action);
  }
  return out;
}

namespace prompts {

namespace {

constexpr std::string_view kThoughtSystem =
    R"(You are a helpful computer use agent designed to complete tasks on a computer. Your goal is to recreate your thought process behind a specific action.

You will be provided with:

1. The task you are attempting to complete.
2. A history of the steps you have already performed (up to 50, if any; none if it was the first action).
3. The specific action you chose to take.
4. The name of the element you clicked (if you clicked on an element). It might be too general or vague, you have to decied what to click based on the screenshot.
5. A screenshot of the computer screen at the moment you decided to take the action.
6. The red marks on the screenshot indicate the position of the click or drag action.

To formulate your thought process, consider:

1. What do you observe on the screen? Consider your task and previous action when you analyzing current screenshot.
2. Evaluate your previous action (if applicable):
   - Did it achieve the intended effect? If not, identify possible reasons (e.g., misclick, inactive element).
      Some typical examples for ineffective action:
       - misclick in an empty space
       - ineffective opening some elements without double click
       - ineffective type text/ press key because of inactivated input box
   - Did the result align with your previous plan, or did something unexpected happen?
      Some typical examples for ineffective action:
         - misclick in a wrong element
         - forget to clear existing text in input bar
3. Based on your action history, assess your progress toward completing the overall task.
4. Consider if you're exploring how to finish the task because of failed attempts in history steps.


Present your thought process as a clear, natural first-person narrative that explains your reasoning at that moment.

Important requirements:
1. **DO NOT** mention the red marks in your response. These marks were **added after the fact** to indicate the position of your click or drag actions, and they were not on the screen when you made the decision. **DO NOT** mention "red box", "red square", "red circle", or "red arrow" in your response.
2. Write as if you are thinking in real-time before taking the action. Do not include post-action evaluation or hindsight.)";

constexpr std::string_view kThoughtCorrection =
    "\n\nYour previous answer mentioned the red marks. Rewrite your thought process without any "
    "reference to red marks, red boxes, red squares, red circles or red arrows.";

constexpr std::array<std::string_view, 4> kForbidden = {"red box", "red circle", "red arrow", "red square"};

constexpr std::string_view kBoostSystem =
    R"(You are a helpful assistant who can help users complete computer tasks, with **full permission** to make any operations on the user's computer. The operating system is windows.
Based on the provided current state, you need to suggest the next action to complete the task. Do not try to complete the entire task in one step. Break it down into smaller steps, and at each step you will get a new state to interact with.

IMPORTANT: You must strictly adhere to the following rules:

1. Choose ONLY ONE action from the list below for each response, DO NOT perform more than one action per step.
2. Follow the exact syntax format for the selected action, DO NOT create or use any actions other than those listed.
3. Once the task is completed, output action finish.

Valid actions:

1. click (x, y)
   click the element at the position (x, y) on the screen

2. right click (x, y)
   right click the element at the position (x, y) on the screen

3. double click (x, y)
   double click the element at the position (x, y) on the screen

4. drag from (x1, y1) to (x2, y2)
   drag the element from position (x1, y1) to (x2, y2).

5. scroll (x)
   scroll the screen vertically with pixel offset x. Positive values of x: scroll up, negative values of x: scroll down.

6. press key: key_content
   press the key key_content on the keyboard.

7. hotkey (key1, key2)
   press the hotkey composed of key1 and key2.

8. hotkey (key1, key2, key3)
   press the hotkey composed of key1, key2, and key3.

9. type text: text_content
   type content text_content on the keyboard.
   Note that before typing text, you need to ensure the text box or input field is active/focused first. If the text box is not yet activated, you should first click on it to activate it, and then use type text in a separate step.

10. wait
    wait for some time, usually for the system to respond, screen to refresh, advertisement to finish.

11. finish
    indicating that the task has been completed.

12. fail
    indicating that the task has failed, of this task is infeasible because not enough information is provided.

Before deciding your next action, you should think carefully about the current state of the screen and your history steps. Contain the following points in your thought process:

1. What do you observe on the screen? Consider your task and previous action when you analyzing current screenshot.
2. What's your previous plan and action (if applicable)? Evaluate your previous plan and action in three conditions:
   1. It didn't make any effect. You should dentify possible reasons (e.g., misclick, inactive element) and adjust your plan in this step.
      Some typical examples for ineffective action:
       - misclick in an empty space
       - ineffective opening some elements without double click
       - ineffective type text/ press key because of inactivated input box
   2. It made some effect, but the result does not align with previous plan. You should dentify possible reasons (e.g., misclick, inactive element) and correct it in this step.
      Some typical examples for ineffective action:
         - misclick in a wrong element
         - forget to clear existing text in input bar
   3. It made some effect, and it successfully align with previous plan. You should progress to the next step based on the current state.
3. Based on your action history, assess your progress toward completing the overall task.
4. Exploring new ways to finish the task if there are already failed attempts in history steps. **DO NOT repeat** the history actions.


Response Format: Your thought process

Action: The specific action you choose to take.)";

constexpr std::string_view kScaffoldSystem =
    R"(You are a helpful assistant who can help users complete computer tasks, with **full permission** to make any operations on the user's computer.
Based on the provided current state, you need to suggest the next action to complete the task. Do not try to complete the entire task in one step. Break it down into smaller steps, and at each step you will get a new state to interact with.
IMPORTANT: You must strictly adhere to the following rules:
1. Choose ONLY ONE action from the list below for each response, DO NOT perform more than one action per step.
2. Follow the exact syntax format for the selected action, DO NOT create or use any actions other than those listed.
3. Once the task is completed, output action finish.

Valid actions:
1. click (x, y)
click the element at the position (x, y) on the screen

2. right click (x, y)
right click the element at the position (x, y) on the screen

3. double click (x, y)
double click the element at the position (x, y) on the screen

4. drag from (x1, y1) to (x2, y2)
drag the element from position (x1, y1) to (x2, y2).

5. scroll (x)
scroll the screen vertically with pixel offset x. Positive values of x: scroll up, negative values of x: scroll down.

6. press key: key_content
press the key key_content on the keyboard.

7. hotkey (key1, key2)
press the hotkey composed of key1 and key2.

8. hotkey (key1, key2, key3)
press the hotkey composed of key1, key2, and key3.

9. type text: text_content
type content text_content on the keyboard.

10. wait
wait for some time, usually for the system to respond, screen to refresh, advertisement to finish.

11. finish
indicating that the task has been completed.

12. fail
indicating that the task has failed, of this task is infeasible because not enough information is provided.

Response Format: {Your thought process}
Action: {The specific action you choose to take})";

constexpr std::string_view kFormatReminder =
    "\n\nYour previous reply could not be parsed. Reply with your thought process followed by exactly "
    "one final line of the form \"Action: <action>\" using one of the valid actions listed above.";

constexpr std::string_view kJudgeSystem =
    "You verify that a computer is ready for a task to begin. Look at the screenshot and decide "
    "whether the initial state matches the expectation. Answer with a single word: yes or no.";

}  // namespace

std::string_view thought_system() { return kThoughtSystem; }

std::string thought_user(std::string_view task, std::string_view history, std::string_view action,
                         const std::optional<std::string>& element_name) {
  std::string out = "The task you are attempting to complete: " + std::string(task) +
                    "\nYour performing history: " + std::string(history) +
                    "\nThe specific action you chose to perform: " + std::string(action);
  if (element_name) out += "\nThe name of the element you clicked: " + *element_name;
  return out;
}

std::string_view thought_correction() { return kThoughtCorrection; }

std::span<const std::string_view> forbidden_mark_phrases() { return kForbidden; }

bool mentions_marks(std::string_view text) {
  const auto lower = to_lower(text);
  for (auto phrase : kForbidden) {
    if (lower.find(phrase) != std::string::npos) return true;
  }
  return false;
}

std::string_view boost_system() { return kBoostSystem; }

std::string boost_user(std::string_view task, std::string_view history) {
  return "The task you are attempting to complete: " + std::string(task) +
         "\nYour performing history: " + std::string(history) +
         "\nGiven the screenshot as below. What's the next step that you will do to help with the task?";
}

std::string_view scaffold_system() { return kScaffoldSystem; }

std::string scaffold_user(std::string_view task, std::string_view history) {
  return "Your task is: " + std::string(task) +
         "\nHistory of the previous actions and thoughts you have done to reach the current screen: " +
         std::string(history) +
         "\n--------------------------------------------\nGiven the screenshot, what's the next step you will do to "
         "help with the task?";
}

std::string_view format_reminder() { return kFormatReminder; }

std::string_view init_judge_system() { return kJudgeSystem; }

std::string init_judge_user(std::string_view task, std::string_view expectation) {
  return "Task about to start: " + std::string(task) + "\nExpected initial state: " + std::string(expectation) +
         "\nIs the computer in the expected initial state? Answer yes or no.";
}

}  // namespace prompts
}  // namespace trajkit
